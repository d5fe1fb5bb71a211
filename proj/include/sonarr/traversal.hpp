#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "sonarr/actions.hpp"
#include "sonarr/filter.hpp"
#include "sonarr/network.hpp"
#include "sonarr/path.hpp"

namespace sonarr {

class TraversalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TraversalConfig {
  Id start = 0;
  Id end = 0;
  // Maximum generic rules allowed to fire while assessing one connection.
  std::uint32_t generic_rule_limit = 10;
  std::optional<FilterExpr> completion_filter;
  std::optional<std::uint64_t> stop_max_final_paths;
  std::optional<std::chrono::milliseconds> stop_wall_clock;
  // Cap on path expansions; a safety net for tests, unset in normal runs.
  std::optional<std::uint64_t> step_budget;
  ActionMode action_mode = ActionMode::DryRun;
};

enum class StopReason { Exhausted, MaxPaths, TimeLimit, StepBudget };

const char* stop_reason_name(StopReason reason);
std::optional<StopReason> parse_stop_reason(std::string_view name);

struct ChainExtreme {
  std::uint64_t length = 0;
  std::uint64_t count = 0;

  bool operator==(const ChainExtreme&) const = default;
};

struct RunSummary {
  std::uint64_t total_final_paths = 0;
  std::uint64_t total_connections = 0;
  std::uint64_t total_rules_triggered = 0;
  ChainExtreme longest_chain;
  ChainExtreme shortest_chain;
  std::uint64_t expansions = 0;
  // Traversal only; merge and sort time is reported separately.
  std::chrono::milliseconds elapsed{0};
  std::chrono::milliseconds sort_merge_elapsed{0};
  StopReason stop_reason = StopReason::Exhausted;
  std::uint32_t worker_count = 1;
  std::uint64_t actions_dispatched = 0;
  std::uint64_t action_failures = 0;

  // Folds one final path into the counters.
  void record(const RealityPath& path);
  // Folds another worker's counters in (counts and chain extremes only).
  void merge(const RunSummary& other);

  bool operator==(const RunSummary&) const = default;
};

// Issues path IDs start, start + stride, start + 2*stride, ...
class PathIdAllocator {
 public:
  explicit PathIdAllocator(Id start = 0, Id stride = 1) : next_(start), stride_(stride) {}
  Id take();

 private:
  Id next_;
  Id stride_;
};

// Everything an expansion reads besides the path itself.
struct TraversalContext {
  const IndexedNetwork& net;
  const TraversalConfig& config;
  const BoundFilter* filter = nullptr;
  ActionExecutor* actions = nullptr;
};

// Throws TraversalError when start or end does not exist.
void check_config(const IndexedNetwork& net, const TraversalConfig& config);

RealityPath seed_path(const IndexedNetwork& net, Id start, Id id, Clock::time_point started_at);

RealityPath clone_path(const RealityPath& path, Id new_id);

// Builds the next connection from the path's active variants, falling back to
// fresh clones of the base entities, and records them as accessed. Throws
// TraversalError if the link does not join `from` and `to`, or runs against
// its direction.
Connection make_connection(RealityPath& path, const IndexedNetwork& net, Id from, Id link, Id to,
                           Id connection_id);

Connection make_finalization_connection(RealityPath& path, const IndexedNetwork& net, Id container,
                                        Id connection_id);

// Fact value seen by normal rules: environment, then active container
// variants, then active link variants, then the base network. Throws
// UnknownIdError.
bool lookup_normal_fact(const RealityPath& path, const IndexedNetwork& net, Id fact);

bool evaluate_normal_rule(const NormalRule& rule, const RealityPath& path,
                          const Connection& connection, const IndexedNetwork& net);

bool evaluate_generic_rule(const GenericRule& rule, const Connection& connection,
                           const IndexedNetwork& net);

void apply_normal_postconditions(const NormalRule& rule, RealityPath& path, Connection& connection,
                                 const IndexedNetwork& net);

void apply_generic_postconditions(const GenericRule& rule, RealityPath& path,
                                  Connection& connection, const IndexedNetwork& net);

// Runs the rule loop on a connection and returns connection.triggered_rules.
const std::vector<Id>& run_rules(RealityPath& path, Connection& connection,
                                 const TraversalContext& ctx);

// True when the connection's state is new to the path (keep), false when an
// earlier connection has an identical fingerprint (drop). The path's env
// facts must already reflect the connection's assessment.
bool termination_heuristic(const RealityPath& path, const Connection& connection,
                           const IndexedNetwork& net);

struct Expansion {
  std::vector<RealityPath> in_progress;
  std::vector<RealityPath> finals;
};

// One step of the search. Consumes the path. In-progress children come back
// ordered so that pushing them in sequence onto a LIFO stack pops the lowest
// link ID first.
Expansion expand_path(RealityPath path, const TraversalContext& ctx, PathIdAllocator& ids);

MetricVector compute_metrics(const RealityPath& path, const IndexedNetwork& net);

using PathSink = std::function<void(RealityPath&&)>;

// Exhaustive depth-first search in the calling thread. Final paths reach the
// sink in discovery order.
RunSummary single_threaded_search(const IndexedNetwork& net, const TraversalConfig& config,
                                  const PathSink& sink, ActionExecutor* actions = nullptr);

}  // namespace sonarr
