#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "sonarr/network.hpp"

namespace sonarr {

// Parses and validates a JSON model document. Throws ParseError for
// malformed input and ValidationError for dangling or duplicate references.
Network load_network(std::string_view document);

// Parses without validating; used by `validate` to report every violation.
Network parse_network(std::string_view document);

Network load_network_file(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);

// Inverse of load_network: load_network(render_network(n)) == n.
std::string render_network(const Network& net);

}  // namespace sonarr
