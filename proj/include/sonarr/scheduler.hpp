#pragma once

#include <atomic>
#include <condition_variable>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <vector>

#include "sonarr/pathstore.hpp"
#include "sonarr/traversal.hpp"

namespace sonarr {

class EngineError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EngineConfig {
  std::uint32_t worker_count = 1;
  // A worker holding at least this many paths donates half to an idle worker.
  std::uint32_t redistribution_threshold = 10;
  TraversalConfig traversal;
  // Off in timing comparisons: no sort files, no merged files.
  bool sort_and_merge = true;
  // Called with the running final-path total every 10,000 paths.
  std::function<void(std::uint64_t)> progress;
};

// Processors minus one (the coordinating thread), at least one.
std::uint32_t plan_workers(unsigned processor_count);
std::uint32_t default_worker_count();

void check_engine_config(const EngineConfig& config);

enum class WorkerStatus { Working, Idle };

struct CoordinatorStats {
  std::uint64_t transfers = 0;
  std::uint64_t paths_transferred = 0;
};

// Shared status table and transfer mailboxes. Every member is safe to call
// from any worker.
class Coordinator {
 public:
  Coordinator(std::size_t worker_count, std::size_t threshold);

  std::size_t worker_count() const noexcept { return status_.size(); }

  // Hands the initial path to a worker and marks it Working.
  void seed(std::size_t worker, RealityPath path);

  // When `stack` holds at least the threshold and some worker is Idle, moves
  // floor(size / 2) paths from the bottom of the stack to the lowest-index
  // idle worker and marks it Working. Returns the number of paths moved.
  std::size_t redistribute(std::size_t worker, std::vector<RealityPath>& stack);

  // Called with an empty stack. Marks the worker Idle and blocks until paths
  // arrive (moved into `stack`, returns true) or the run ends (false).
  bool wait_for_work(std::size_t worker, std::vector<RealityPath>& stack);

  // Ends the run early; wakes every waiting worker.
  void request_stop();
  bool stop_requested() const noexcept { return stop_.load(std::memory_order_relaxed); }
  bool terminated() const;

  // True when every worker is Idle with an empty mailbox. Locks internally.
  bool detect_termination();

  WorkerStatus status(std::size_t worker) const;
  std::size_t pending(std::size_t worker) const;
  CoordinatorStats stats() const;

 private:
  bool all_idle_locked() const;

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::vector<WorkerStatus> status_;
  std::vector<std::vector<RealityPath>> inbox_;
  std::atomic<std::size_t> idle_count_{0};
  std::size_t threshold_;
  bool terminated_ = false;
  std::atomic<bool> stop_{false};
  CoordinatorStats stats_;
};

struct EngineResult {
  RunSummary summary;
  // Empty when sort_and_merge is off.
  OffsetTable offsets;
  CoordinatorStats coordination;
  // Expansions performed by each worker.
  std::vector<std::uint64_t> worker_expansions;
};

// Multi-worker exhaustive search. Writes the per-worker file sets into
// `out_dir`, then (with sort_and_merge) per-worker sort files and the merged
// final-paths and index files. On failure the partial files are removed and
// the error is rethrown.
EngineResult multi_threaded_search(const IndexedNetwork& net, const EngineConfig& config,
                                   const std::filesystem::path& out_dir,
                                   ActionExecutor* actions = nullptr);

// Single-worker search with the same on-disk output as a one-worker
// multi-threaded run.
EngineResult single_threaded_to_files(const IndexedNetwork& net, const EngineConfig& config,
                                      const std::filesystem::path& out_dir,
                                      ActionExecutor* actions = nullptr);

// Deletes result files (worker and merged .tmp files, summary) from a
// previous run. Other files are left alone.
void clear_result_files(const std::filesystem::path& dir);

}  // namespace sonarr
