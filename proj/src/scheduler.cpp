#include "sonarr/scheduler.hpp"

#include <algorithm>
#include <exception>
#include <memory>
#include <thread>

#include "sonarr/summary.hpp"

namespace sonarr {
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kProgressEvery = 10'000;

std::unique_ptr<ActionExecutor> default_executor(ActionMode mode) {
  if (mode == ActionMode::Execute) return std::make_unique<ShellExecutor>();
  return std::make_unique<DryRunExecutor>();
}

void prepare_out_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw EngineError("output directory " + dir.string() + " is not usable");
  }
  clear_result_files(dir);
  // Probe writability up front so the failure names the directory.
  const auto probe = dir / ".write-probe";
  {
    std::ofstream out(probe);
    if (!out) throw EngineError("output directory " + dir.string() + " is not writable");
  }
  fs::remove(probe, ec);
}

// State shared by all workers of one run.
struct RunState {
  RunState(const TraversalContext& c, const EngineConfig& cfg, Coordinator& co)
      : ctx(c), config(cfg), coord(co) {}

  const TraversalContext& ctx;
  const EngineConfig& config;
  Coordinator& coord;
  std::optional<Clock::time_point> deadline;
  std::atomic<std::uint64_t> finals{0};
  std::atomic<std::uint64_t> expansions{0};
  std::atomic<int> stop_reason{-1};
  std::mutex error_mu;
  std::exception_ptr error;

  void stop(StopReason reason) {
    int expected = -1;
    stop_reason.compare_exchange_strong(expected, static_cast<int>(reason));
    coord.request_stop();
  }

  void fail(std::exception_ptr e) {
    {
      std::lock_guard lock(error_mu);
      if (!error) error = e;
    }
    coord.request_stop();
  }
};

struct WorkerState {
  std::size_t index = 0;
  std::vector<RealityPath> stack;
  PathIdAllocator ids;
  std::unique_ptr<PathFileWriter> sink;
  RunSummary summary;
};

// True when the run must stop before this worker expands another path.
bool hit_stop_condition(RunState& run) {
  const auto& t = run.config.traversal;
  if (t.stop_max_final_paths && run.finals.load() >= *t.stop_max_final_paths) {
    run.stop(StopReason::MaxPaths);
    return true;
  }
  if (t.step_budget && run.expansions.load() >= *t.step_budget) {
    run.stop(StopReason::StepBudget);
    return true;
  }
  if (run.deadline && Clock::now() >= *run.deadline) {
    run.stop(StopReason::TimeLimit);
    return true;
  }
  return false;
}

void worker_loop(WorkerState& w, RunState& run) {
  try {
    while (!run.coord.stop_requested()) {
      if (w.stack.empty()) {
        if (!run.coord.wait_for_work(w.index, w.stack)) break;
        continue;
      }
      if (hit_stop_condition(run)) break;
      run.coord.redistribute(w.index, w.stack);

      RealityPath path = std::move(w.stack.back());
      w.stack.pop_back();
      Expansion step = expand_path(std::move(path), run.ctx, w.ids);
      ++w.summary.expansions;
      run.expansions.fetch_add(1, std::memory_order_relaxed);
      for (auto& final_path : step.finals) {
        w.summary.record(final_path);
        w.sink->append(final_path);
        const auto n = run.finals.fetch_add(1) + 1;
        if (run.config.progress && n % kProgressEvery == 0) run.config.progress(n);
      }
      for (auto& child : step.in_progress) w.stack.push_back(std::move(child));
    }
    w.sink->flush();
  } catch (...) {
    run.fail(std::current_exception());
  }
}

void remove_quietly(const fs::path& file) {
  std::error_code ec;
  fs::remove(file, ec);
}

}  // namespace

std::uint32_t plan_workers(unsigned processor_count) {
  return processor_count > 1 ? processor_count - 1 : 1;
}

std::uint32_t default_worker_count() { return plan_workers(std::thread::hardware_concurrency()); }

void check_engine_config(const EngineConfig& config) {
  if (config.worker_count < 1) throw EngineError("worker count must be at least 1");
  if (config.redistribution_threshold < 2) {
    throw EngineError("redistribution threshold must be at least 2");
  }
  if (config.traversal.generic_rule_limit < 1) {
    throw EngineError("generic rule limit must be at least 1");
  }
}

Coordinator::Coordinator(std::size_t worker_count, std::size_t threshold)
    : status_(worker_count, WorkerStatus::Idle),
      inbox_(worker_count),
      idle_count_(worker_count),
      threshold_(threshold) {}

void Coordinator::seed(std::size_t worker, RealityPath path) {
  std::lock_guard lock(mu_);
  inbox_.at(worker).push_back(std::move(path));
  if (status_[worker] == WorkerStatus::Idle) {
    status_[worker] = WorkerStatus::Working;
    --idle_count_;
  }
  cv_.notify_all();
}

std::size_t Coordinator::redistribute(std::size_t worker, std::vector<RealityPath>& stack) {
  // Cheap unlocked pre-check; the decision is repeated under the lock.
  if (stack.size() < threshold_ || idle_count_.load(std::memory_order_relaxed) == 0) return 0;
  std::lock_guard lock(mu_);
  std::optional<std::size_t> target;
  for (std::size_t i = 0; i < status_.size(); ++i) {
    if (i != worker && status_[i] == WorkerStatus::Idle) {
      target = i;
      break;
    }
  }
  if (!target) return 0;
  const std::size_t give = stack.size() / 2;
  auto& box = inbox_[*target];
  box.insert(box.end(), std::make_move_iterator(stack.begin()),
             std::make_move_iterator(stack.begin() + static_cast<std::ptrdiff_t>(give)));
  stack.erase(stack.begin(), stack.begin() + static_cast<std::ptrdiff_t>(give));
  status_[*target] = WorkerStatus::Working;
  --idle_count_;
  ++stats_.transfers;
  stats_.paths_transferred += give;
  cv_.notify_all();
  return give;
}

bool Coordinator::all_idle_locked() const {
  for (std::size_t i = 0; i < status_.size(); ++i) {
    if (status_[i] != WorkerStatus::Idle || !inbox_[i].empty()) return false;
  }
  return true;
}

bool Coordinator::wait_for_work(std::size_t worker, std::vector<RealityPath>& stack) {
  std::unique_lock lock(mu_);
  if (inbox_[worker].empty() && status_[worker] == WorkerStatus::Working) {
    status_[worker] = WorkerStatus::Idle;
    ++idle_count_;
  }
  while (true) {
    if (stop_.load() || terminated_) return false;
    if (!inbox_[worker].empty()) {
      // A donor already marked this worker Working.
      stack = std::move(inbox_[worker]);
      inbox_[worker].clear();
      return true;
    }
    // Idle workers cannot create work and donors mark recipients Working
    // under this lock, so an all-idle table with empty mailboxes is final.
    if (all_idle_locked()) {
      terminated_ = true;
      cv_.notify_all();
      return false;
    }
    cv_.wait(lock);
  }
}

void Coordinator::request_stop() {
  std::lock_guard lock(mu_);
  stop_.store(true);
  cv_.notify_all();
}

bool Coordinator::terminated() const {
  std::lock_guard lock(mu_);
  return terminated_;
}

bool Coordinator::detect_termination() {
  std::lock_guard lock(mu_);
  if (all_idle_locked()) terminated_ = true;
  return terminated_;
}

WorkerStatus Coordinator::status(std::size_t worker) const {
  std::lock_guard lock(mu_);
  return status_.at(worker);
}

std::size_t Coordinator::pending(std::size_t worker) const {
  std::lock_guard lock(mu_);
  return inbox_.at(worker).size();
}

CoordinatorStats Coordinator::stats() const {
  std::lock_guard lock(mu_);
  return stats_;
}

static bool is_result_file(const std::string& name) {
  if (name == kSummaryFileName) return true;
  std::string_view n = name;
  if (n.ends_with(".partial")) n.remove_suffix(8);
  if (!n.ends_with(".tmp")) return false;
  n.remove_suffix(4);
  std::vector<std::string_view> titles = {kFinalPathsTitle, kIndexTitle};
  for (SortKey key : kAllSortKeys) titles.push_back(sort_key_title(key));
  for (auto title : titles) {
    if (n == title) return true;
    if (n.size() > title.size() + 1 && n.starts_with(title) && n[title.size()] == '-') {
      const auto digits = n.substr(title.size() + 1);
      if (std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        return true;
      }
    }
  }
  return false;
}

void clear_result_files(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) return;
  std::vector<fs::path> doomed;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (entry.is_regular_file() && is_result_file(entry.path().filename().string())) {
      doomed.push_back(entry.path());
    }
  }
  for (const auto& f : doomed) remove_quietly(f);
}

namespace {

void finish_files(std::vector<std::unique_ptr<PathFileWriter>>& writers, const fs::path& out_dir,
                  EngineResult& result) {
  const auto t0 = Clock::now();
  // Each worker sorts its own results.
  if (writers.size() == 1) {
    writers[0]->write_sort_files();
  } else {
    std::vector<std::exception_ptr> errors(writers.size());
    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < writers.size(); ++i) {
      threads.emplace_back([&, i] {
        try {
          writers[i]->write_sort_files();
        } catch (...) {
          errors[i] = std::current_exception();
        }
      });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  writers.clear();
  result.offsets = merge_final_and_index(out_dir, result.summary.worker_count);
  result.summary.sort_merge_elapsed =
      std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - t0);
}

}  // namespace

EngineResult multi_threaded_search(const IndexedNetwork& net, const EngineConfig& config,
                                   const fs::path& out_dir, ActionExecutor* actions) {
  check_engine_config(config);
  check_config(net, config.traversal);
  std::optional<BoundFilter> filter;
  if (config.traversal.completion_filter) {
    filter = bind_filter(*config.traversal.completion_filter, net, config.traversal.end);
  }
  std::unique_ptr<ActionExecutor> owned;
  if (actions == nullptr) {
    owned = default_executor(config.traversal.action_mode);
    actions = owned.get();
  }
  prepare_out_dir(out_dir);

  const std::size_t count = config.worker_count;
  const TraversalContext ctx{net, config.traversal, filter ? &*filter : nullptr, actions};
  Coordinator coord(count, config.redistribution_threshold);
  RunState run(ctx, config, coord);

  EngineResult result;
  std::vector<WorkerState> workers(count);
  std::vector<std::unique_ptr<PathFileWriter>> writers;
  try {
    for (std::size_t i = 0; i < count; ++i) {
      workers[i].index = i;
      workers[i].ids = PathIdAllocator(static_cast<Id>(i), static_cast<Id>(count));
      workers[i].sink = std::make_unique<PathFileWriter>(out_dir, i);
    }

    const auto started = Clock::now();
    if (config.traversal.stop_wall_clock) run.deadline = started + *config.traversal.stop_wall_clock;
    // Only the first worker receives a path initially.
    coord.seed(0, seed_path(net, config.traversal.start, workers[0].ids.take(), started));

    std::vector<std::thread> threads;
    threads.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      threads.emplace_back([&, i] { worker_loop(workers[i], run); });
    }
    for (auto& t : threads) t.join();
    const auto traversed = Clock::now();

    if (run.error) std::rethrow_exception(run.error);

    for (auto& w : workers) {
      result.summary.merge(w.summary);
      result.worker_expansions.push_back(w.summary.expansions);
      writers.push_back(std::move(w.sink));
    }
    result.summary.worker_count = static_cast<std::uint32_t>(count);
    result.summary.elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(traversed - started);
    const int reason = run.stop_reason.load();
    result.summary.stop_reason = reason < 0 ? StopReason::Exhausted : static_cast<StopReason>(reason);
    const auto stats = actions->stats();
    result.summary.actions_dispatched = stats.dispatched;
    result.summary.action_failures = stats.failed;
    result.coordination = coord.stats();

    if (config.sort_and_merge) {
      finish_files(writers, out_dir, result);
    } else {
      for (auto& wr : writers) wr->flush();
      writers.clear();
    }
    write_run_summary(out_dir, result.summary);
  } catch (...) {
    workers.clear();
    writers.clear();
    clear_result_files(out_dir);
    throw;
  }
  return result;
}

EngineResult single_threaded_to_files(const IndexedNetwork& net, const EngineConfig& config,
                                      const fs::path& out_dir, ActionExecutor* actions) {
  check_engine_config(config);
  check_config(net, config.traversal);
  prepare_out_dir(out_dir);

  EngineResult result;
  std::vector<std::unique_ptr<PathFileWriter>> writers;
  try {
    writers.push_back(std::make_unique<PathFileWriter>(out_dir, 0));
    auto& sink = *writers[0];
    std::uint64_t n = 0;
    result.summary = single_threaded_search(
        net, config.traversal,
        [&](RealityPath&& p) {
          sink.append(p);
          if (config.progress && ++n % kProgressEvery == 0) config.progress(n);
        },
        actions);
    sink.flush();
    result.summary.worker_count = 1;
    result.worker_expansions = {result.summary.expansions};
    if (config.sort_and_merge) {
      finish_files(writers, out_dir, result);
    } else {
      writers.clear();
    }
    write_run_summary(out_dir, result.summary);
  } catch (...) {
    writers.clear();
    clear_result_files(out_dir);
    throw;
  }
  return result;
}

}  // namespace sonarr
