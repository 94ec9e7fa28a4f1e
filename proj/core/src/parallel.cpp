// SPDX-License-Identifier: Apache-2.0
#include "splatinit/parallel.hpp"

#include <algorithm>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

namespace splatinit {
namespace {

int g_thread_override = 0;
bool g_thread_count_frozen = false;

int detect_thread_count() {
  g_thread_count_frozen = true;
  if (g_thread_override >= 1) {
    return g_thread_override;
  }
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (n <= 0) n = 1;
  if (const char* env = std::getenv("SPLATINIT_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1) n = std::min<long>(n, cap);
  }
  return n;
}

// Persistent pool of thread_count()-1 workers; the caller's thread runs the
// first slice itself. Tasks are "run fn for slice s" with a shared counter.
class Pool {
 public:
  explicit Pool(int workers) {
    for (int i = 0; i < workers; ++i) {
      threads_.emplace_back([this, i] { worker_loop(i + 1); });
    }
  }

  ~Pool() {
    {
      std::unique_lock lock(mutex_);
      stop_ = true;
    }
    cv_start_.notify_all();
    for (auto& t : threads_) t.join();
  }

  void run(const std::function<void(int)>& slice_fn, int slices) {
    {
      std::unique_lock lock(mutex_);
      slice_fn_ = &slice_fn;
      total_slices_ = slices;
      done_slices_ = 1;  // slice 0 runs on the caller
      ++generation_;
    }
    cv_start_.notify_all();
    slice_fn(0);
    {
      std::unique_lock lock(mutex_);
      cv_done_.wait(lock, [this] { return done_slices_ >= total_slices_; });
      slice_fn_ = nullptr;
    }
  }

 private:
  void worker_loop(int index) {
    std::uint64_t seen = 0;
    for (;;) {
      const std::function<void(int)>* fn = nullptr;
      {
        std::unique_lock lock(mutex_);
        cv_start_.wait(lock, [&] { return stop_ || generation_ != seen; });
        if (stop_) return;
        seen = generation_;
        if (index < total_slices_) fn = slice_fn_;
      }
      if (fn) {
        (*fn)(index);
        std::unique_lock lock(mutex_);
        if (++done_slices_ >= total_slices_) cv_done_.notify_all();
      }
    }
  }

  std::mutex mutex_;
  std::condition_variable cv_start_;
  std::condition_variable cv_done_;
  std::vector<std::thread> threads_;
  const std::function<void(int)>* slice_fn_ = nullptr;
  int total_slices_ = 0;
  int done_slices_ = 0;
  std::uint64_t generation_ = 0;
  bool stop_ = false;
};

Pool& pool() {
  static Pool instance(thread_count() - 1);
  return instance;
}

}  // namespace

int thread_count() {
  static const int count = detect_thread_count();
  return count;
}

void set_thread_count(int n) {
  if (n < 0) {
    throw std::invalid_argument("set_thread_count: count must be >= 0");
  }
  if (g_thread_count_frozen) {
    throw std::logic_error("set_thread_count: thread pool already initialized");
  }
  g_thread_override = n;
}

void parallel_for_slices(std::int64_t n,
                         const std::function<void(int, std::int64_t, std::int64_t)>& fn) {
  const int slices = thread_count();
  auto slice_range = [n, slices](int s, std::int64_t& begin, std::int64_t& end) {
    const std::int64_t chunk = n / slices;
    const std::int64_t rest = n % slices;
    begin = s * chunk + std::min<std::int64_t>(s, rest);
    end = begin + chunk + (s < rest ? 1 : 0);
  };
  if (slices == 1 || n <= 1) {
    fn(0, 0, n);
    return;
  }
  auto slice_fn = [&](int s) {
    std::int64_t begin, end;
    slice_range(s, begin, end);
    if (begin < end) fn(s, begin, end);
  };
  pool().run(slice_fn, slices);
}

void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn) {
  parallel_for_slices(n, [&fn](int, std::int64_t begin, std::int64_t end) {
    for (std::int64_t i = begin; i < end; ++i) fn(i);
  });
}

}  // namespace splatinit
