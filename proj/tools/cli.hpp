#pragma once

#include <chrono>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace sonarr::cli {

// Runs one command line (argv[0] is the program name). Returns the exit
// status: 0 success, 1 failure, 2 usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// "1500ms", "30s", "5m", "2h"; a bare number is seconds. Throws
// std::invalid_argument.
std::chrono::milliseconds parse_duration(std::string_view text);

struct FactOverride {
  int fact = 0;
  bool value = false;
};

// "ID=true" / "ID=false". Throws std::invalid_argument.
FactOverride parse_fact_override(std::string_view text);

}  // namespace sonarr::cli
