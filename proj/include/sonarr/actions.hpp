#pragma once

#include <atomic>
#include <mutex>
#include <string>
#include <vector>

#include "sonarr/network.hpp"

namespace sonarr {

enum class ActionMode { DryRun, Execute };

struct ActionStats {
  std::uint64_t dispatched = 0;
  std::uint64_t failed = 0;
};

// Receives the actions of every fired rule. Implementations must be safe to
// call from several workers at once and must never throw into traversal.
class ActionExecutor {
 public:
  virtual ~ActionExecutor() = default;
  virtual void dispatch(const Action& action, Id rule) noexcept = 0;
  virtual ActionStats stats() const = 0;
};

// Records commands without running anything. Keeps at most `log_limit`
// commands for inspection.
class DryRunExecutor final : public ActionExecutor {
 public:
  explicit DryRunExecutor(std::size_t log_limit = 0) : log_limit_(log_limit) {}

  void dispatch(const Action& action, Id rule) noexcept override;
  ActionStats stats() const override { return {dispatched_.load(), 0}; }
  std::vector<std::string> log() const;

 private:
  std::size_t log_limit_;
  std::atomic<std::uint64_t> dispatched_{0};
  mutable std::mutex mu_;
  std::vector<std::string> log_;
};

// Runs commands through the host shell and counts nonzero exits.
class ShellExecutor final : public ActionExecutor {
 public:
  void dispatch(const Action& action, Id rule) noexcept override;
  ActionStats stats() const override { return {dispatched_.load(), failed_.load()}; }

 private:
  std::atomic<std::uint64_t> dispatched_{0};
  std::atomic<std::uint64_t> failed_{0};
  std::mutex mu_;
};

}  // namespace sonarr
