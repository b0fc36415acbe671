#pragma once

#include <atomic>
#include <cstddef>
#include <functional>

namespace pcc {

/// How a long computation is run: degree of parallelism, progress reporting,
/// and cooperative cancellation. Results never depend on `threads`.
struct ExecutionContext {
  std::size_t threads = 1;
  /// Called with (completed units, total units); may be invoked from worker threads.
  std::function<void(std::size_t, std::size_t)> progress;
  const std::atomic<bool>* cancel = nullptr;

  bool cancelled() const noexcept { return cancel != nullptr && cancel->load(std::memory_order_relaxed); }
  /// Throws pcc::Cancelled when the cancel flag is set.
  void check_cancelled() const;
};

/// Runs body(i) for i in [0, count) on up to ctx.threads threads. Each task
/// must write only to its own output slot. The first exception thrown by any
/// task is rethrown after all threads join.
void parallel_for(std::size_t count, const ExecutionContext& ctx, const std::function<void(std::size_t)>& body);

/// Thread-safe counter that forwards to ExecutionContext::progress.
class ProgressTracker {
 public:
  ProgressTracker(const ExecutionContext& ctx, std::size_t total) : ctx_(ctx), total_(total) {}
  void advance(std::size_t units = 1);
  std::size_t total() const noexcept { return total_; }

 private:
  const ExecutionContext& ctx_;
  std::size_t total_;
  std::atomic<std::size_t> done_{0};
};

}  // namespace pcc
