#include "sonarr/summary.hpp"

#include <fstream>
#include <json.hpp>

#include "sonarr/pathstore.hpp"

namespace sonarr {

using nlohmann::json;

std::string render_run_summary(const RunSummary& s) {
  json j = {
      {"total_final_paths", s.total_final_paths},
      {"total_connections", s.total_connections},
      {"total_rules_triggered", s.total_rules_triggered},
      {"longest_chain", {{"length", s.longest_chain.length}, {"count", s.longest_chain.count}}},
      {"shortest_chain", {{"length", s.shortest_chain.length}, {"count", s.shortest_chain.count}}},
      {"expansions", s.expansions},
      {"elapsed_ms", s.elapsed.count()},
      {"sort_merge_elapsed_ms", s.sort_merge_elapsed.count()},
      {"stop_reason", stop_reason_name(s.stop_reason)},
      {"worker_count", s.worker_count},
      {"actions_dispatched", s.actions_dispatched},
      {"action_failures", s.action_failures},
  };
  return j.dump(2) + "\n";
}

RunSummary parse_run_summary(const std::string& text) {
  RunSummary s;
  try {
    const json j = json::parse(text);
    s.total_final_paths = j.at("total_final_paths").get<std::uint64_t>();
    s.total_connections = j.at("total_connections").get<std::uint64_t>();
    s.total_rules_triggered = j.at("total_rules_triggered").get<std::uint64_t>();
    s.longest_chain = {j.at("longest_chain").at("length").get<std::uint64_t>(),
                       j.at("longest_chain").at("count").get<std::uint64_t>()};
    s.shortest_chain = {j.at("shortest_chain").at("length").get<std::uint64_t>(),
                        j.at("shortest_chain").at("count").get<std::uint64_t>()};
    s.expansions = j.at("expansions").get<std::uint64_t>();
    s.elapsed = std::chrono::milliseconds(j.at("elapsed_ms").get<std::int64_t>());
    s.sort_merge_elapsed = std::chrono::milliseconds(j.at("sort_merge_elapsed_ms").get<std::int64_t>());
    const auto reason = parse_stop_reason(j.at("stop_reason").get<std::string>());
    if (!reason) throw StoreError("summary: unknown stop reason");
    s.stop_reason = *reason;
    s.worker_count = j.at("worker_count").get<std::uint32_t>();
    s.actions_dispatched = j.value("actions_dispatched", std::uint64_t{0});
    s.action_failures = j.value("action_failures", std::uint64_t{0});
  } catch (const json::exception& e) {
    throw StoreError(std::string("summary: ") + e.what());
  }
  return s;
}

void write_run_summary(const std::filesystem::path& dir, const RunSummary& summary) {
  const auto file = dir / kSummaryFileName;
  std::ofstream out(file, std::ios::trunc);
  out << render_run_summary(summary);
  if (!out) throw StoreError("cannot write " + file.string());
}

RunSummary read_run_summary(const std::filesystem::path& dir) {
  const auto file = dir / kSummaryFileName;
  std::ifstream in(file);
  if (!in) throw StoreError("cannot open " + file.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_run_summary(text);
}

}  // namespace sonarr
