#pragma once

#include <filesystem>
#include <string>

#include "sonarr/traversal.hpp"

namespace sonarr {

std::string render_run_summary(const RunSummary& summary);
RunSummary parse_run_summary(const std::string& text);

// Stored as JSON in "{dir}/summary".
void write_run_summary(const std::filesystem::path& dir, const RunSummary& summary);
RunSummary read_run_summary(const std::filesystem::path& dir);

}  // namespace sonarr
