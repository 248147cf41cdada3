#pragma once

#include <condition_variable>
#include <cstddef>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace splitstep {

/// Fixed-size pool for data-parallel loops over disjoint output ranges.
class ThreadPool {
 public:
  explicit ThreadPool(std::size_t threads);
  ~ThreadPool();
  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  std::size_t size() const noexcept { return workers_.size() + 1; }

  /// Splits [begin, end) into contiguous chunks and runs body(chunk_begin, chunk_end) on
  /// each, the calling thread included. Chunk boundaries depend only on the range and
  /// the grain, so outputs never depend on the thread count. Rethrows the first exception.
  void parallel_for(std::size_t begin, std::size_t end, std::size_t grain,
                    const std::function<void(std::size_t, std::size_t)>& body);

 private:
  void worker_loop();
  void drain();

  std::vector<std::thread> workers_;
  std::mutex mutex_;
  std::condition_variable wake_;
  std::condition_variable done_;
  const std::function<void(std::size_t, std::size_t)>* body_ = nullptr;
  std::size_t begin_ = 0, end_ = 0, grain_ = 1, next_ = 0, active_ = 0;
  std::size_t generation_ = 0;
  bool stop_ = false;
  std::exception_ptr error_;
};

/// Process-wide pool used by the pair sums; 1 means run inline.
void set_thread_count(std::size_t threads);
std::size_t thread_count();
ThreadPool& global_pool();

}  // namespace splitstep
