#include <memory>

#include "sonarr/traversal.hpp"

namespace sonarr {

RunSummary single_threaded_search(const IndexedNetwork& net, const TraversalConfig& config,
                                  const PathSink& sink, ActionExecutor* actions) {
  check_config(net, config);
  std::optional<BoundFilter> filter;
  if (config.completion_filter) filter = bind_filter(*config.completion_filter, net, config.end);

  std::unique_ptr<ActionExecutor> owned;
  if (actions == nullptr) {
    if (config.action_mode == ActionMode::Execute) {
      owned = std::make_unique<ShellExecutor>();
    } else {
      owned = std::make_unique<DryRunExecutor>();
    }
    actions = owned.get();
  }
  const TraversalContext ctx{net, config, filter ? &*filter : nullptr, actions};

  const auto started = Clock::now();
  std::optional<Clock::time_point> deadline;
  if (config.stop_wall_clock) deadline = started + *config.stop_wall_clock;

  RunSummary summary;
  PathIdAllocator ids;
  std::vector<RealityPath> stack;
  stack.push_back(seed_path(net, config.start, ids.take(), started));

  while (!stack.empty()) {
    if (config.stop_max_final_paths && summary.total_final_paths >= *config.stop_max_final_paths) {
      summary.stop_reason = StopReason::MaxPaths;
      break;
    }
    if (config.step_budget && summary.expansions >= *config.step_budget) {
      summary.stop_reason = StopReason::StepBudget;
      break;
    }
    if (deadline && Clock::now() >= *deadline) {
      summary.stop_reason = StopReason::TimeLimit;
      break;
    }
    RealityPath path = std::move(stack.back());
    stack.pop_back();
    Expansion step = expand_path(std::move(path), ctx, ids);
    ++summary.expansions;
    for (auto& final_path : step.finals) {
      summary.record(final_path);
      sink(std::move(final_path));
    }
    for (auto& child : step.in_progress) stack.push_back(std::move(child));
  }

  summary.elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - started);
  const auto stats = actions->stats();
  summary.actions_dispatched = stats.dispatched;
  summary.action_failures = stats.failed;
  return summary;
}

}  // namespace sonarr
