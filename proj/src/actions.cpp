#include "sonarr/actions.hpp"

#include <cstdlib>
#include <iostream>

namespace sonarr {

void DryRunExecutor::dispatch(const Action& action, Id rule) noexcept {
  dispatched_.fetch_add(1, std::memory_order_relaxed);
  if (log_limit_ == 0) return;
  try {
    std::lock_guard lock(mu_);
    if (log_.size() < log_limit_) {
      log_.push_back("rule " + std::to_string(rule) + ": " + action.command);
    }
  } catch (...) {
  }
}

std::vector<std::string> DryRunExecutor::log() const {
  std::lock_guard lock(mu_);
  return log_;
}

void ShellExecutor::dispatch(const Action& action, Id rule) noexcept {
  dispatched_.fetch_add(1, std::memory_order_relaxed);
  int status = 0;
  {
    // std::system is not guaranteed reentrant.
    std::lock_guard lock(mu_);
    status = std::system(action.command.c_str());
  }
  if (status != 0) {
    failed_.fetch_add(1, std::memory_order_relaxed);
    std::cerr << "action " << action.id << " (rule " << rule << ") exited with status " << status
              << "\n";
  }
}

}  // namespace sonarr
