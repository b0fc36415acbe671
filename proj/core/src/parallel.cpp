#include "pcc/parallel.hpp"

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "pcc/errors.hpp"

namespace pcc {

void ExecutionContext::check_cancelled() const {
  if (cancelled()) throw Cancelled();
}

void parallel_for(std::size_t count, const ExecutionContext& ctx, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::clamp<std::size_t>(ctx.threads, 1, std::max<std::size_t>(count, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) {
      ctx.check_cancelled();
      body(i);
    }
    return;
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= count || failed.load(std::memory_order_relaxed)) return;
      try {
        ctx.check_cancelled();
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
        return;
      }
    }
  };

  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);
}

void ProgressTracker::advance(std::size_t units) {
  const std::size_t done = done_.fetch_add(units, std::memory_order_relaxed) + units;
  if (ctx_.progress) ctx_.progress(done, total_);
}

}  // namespace pcc
