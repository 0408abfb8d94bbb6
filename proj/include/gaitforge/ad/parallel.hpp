#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace gf {

// Fixed-size worker pool. Work is split into chunks whose boundaries depend
// only on the problem size, never on the thread count, so numerical results
// are identical for any number of workers (each chunk is computed start to
// finish by exactly one thread).
class ThreadPool {
 public:
  explicit ThreadPool(int n_threads) {
    n_threads = std::max(1, n_threads);
    for (int i = 0; i < n_threads - 1; ++i) {
      workers_.emplace_back([this] { worker_loop(); });
    }
  }

  ~ThreadPool() {
    {
      std::lock_guard<std::mutex> lk(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    for (auto& w : workers_) w.join();
  }

  int size() const { return static_cast<int>(workers_.size()) + 1; }

  // Runs fn(chunk_begin, chunk_end) over [0, n) in chunks of chunk_size.
  // The calling thread participates. Chunk boundaries depend only on n and
  // chunk_size, so serial fallback (nested or concurrent use) computes the
  // exact same values.
  void for_chunks(long n, long chunk_size,
                  const std::function<void(long, long)>& fn) {
    if (n <= 0) return;
    if (n <= chunk_size || size() == 1 || in_worker_) {
      fn(0, n);
      return;
    }
    if (busy_.test_and_set(std::memory_order_acquire)) {
      fn(0, n);  // pool occupied by another caller: degrade to serial
      return;
    }
    struct Release {
      std::atomic_flag& f;
      ~Release() { f.clear(std::memory_order_release); }
    } release{busy_};
    std::atomic<long> next{0};
    std::atomic<int> pending{0};
    auto drain = [&] {
      for (;;) {
        long b = next.fetch_add(chunk_size);
        if (b >= n) break;
        fn(b, std::min(n, b + chunk_size));
      }
    };
    {
      std::lock_guard<std::mutex> lk(mu_);
      task_ = [&drain, &pending] {
        drain();
        pending.fetch_sub(1, std::memory_order_release);
      };
      pending.store(static_cast<int>(workers_.size()));
      generation_++;
    }
    cv_.notify_all();
    drain();
    while (pending.load(std::memory_order_acquire) != 0) std::this_thread::yield();
    std::lock_guard<std::mutex> lk(mu_);
    task_ = nullptr;
  }

 private:
  void worker_loop() {
    in_worker_ = true;
    uint64_t seen = 0;
    for (;;) {
      std::function<void()> t;
      {
        std::unique_lock<std::mutex> lk(mu_);
        cv_.wait(lk, [&] { return stop_ || (task_ && generation_ != seen); });
        if (stop_) return;
        seen = generation_;
        t = task_;
      }
      if (t) t();
    }
  }

  static inline thread_local bool in_worker_ = false;

  std::vector<std::thread> workers_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::function<void()> task_;
  std::atomic_flag busy_ = ATOMIC_FLAG_INIT;
  uint64_t generation_ = 0;
  bool stop_ = false;
};

inline int env_worker_count() {
  if (const char* s = std::getenv("GF_WORKERS")) {
    int v = std::atoi(s);
    if (v >= 1) return v;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

// Process-wide pool, sized once from GF_WORKERS (or hardware concurrency).
inline ThreadPool& global_pool() {
  static ThreadPool pool(env_worker_count());
  return pool;
}

inline void parallel_for(long n, long chunk, const std::function<void(long, long)>& fn) {
  global_pool().for_chunks(n, chunk, fn);
}

}  // namespace gf
