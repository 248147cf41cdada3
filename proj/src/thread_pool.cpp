#include "splitstep/thread_pool.hpp"

#include <algorithm>
#include <memory>

namespace splitstep {

ThreadPool::ThreadPool(std::size_t threads) {
  const std::size_t extra = threads > 1 ? threads - 1 : 0;
  for (std::size_t i = 0; i < extra; ++i) workers_.emplace_back([this] { worker_loop(); });
}

ThreadPool::~ThreadPool() {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    stop_ = true;
  }
  wake_.notify_all();
  for (auto& w : workers_) w.join();
}

void ThreadPool::drain() {
  while (true) {
    std::size_t lo;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      if (next_ >= end_) return;
      lo = next_;
      next_ = std::min(end_, next_ + grain_);
    }
    const std::size_t hi = std::min(end_, lo + grain_);
    try {
      (*body_)(lo, hi);
    } catch (...) {
      std::lock_guard<std::mutex> lock(mutex_);
      if (!error_) error_ = std::current_exception();
      next_ = end_;
    }
  }
}

void ThreadPool::worker_loop() {
  std::size_t seen = 0;
  while (true) {
    {
      std::unique_lock<std::mutex> lock(mutex_);
      wake_.wait(lock, [&] { return stop_ || generation_ != seen; });
      if (stop_) return;
      seen = generation_;
      ++active_;
    }
    drain();
    {
      std::lock_guard<std::mutex> lock(mutex_);
      if (--active_ == 0) done_.notify_all();
    }
  }
}

void ThreadPool::parallel_for(std::size_t begin, std::size_t end, std::size_t grain,
                              const std::function<void(std::size_t, std::size_t)>& body) {
  if (begin >= end) return;
  grain = std::max<std::size_t>(1, grain);
  if (workers_.empty() || end - begin <= grain) {
    for (std::size_t lo = begin; lo < end; lo += grain) body(lo, std::min(end, lo + grain));
    return;
  }
  {
    std::lock_guard<std::mutex> lock(mutex_);
    body_ = &body;
    begin_ = begin;
    end_ = end;
    grain_ = grain;
    next_ = begin;
    error_ = nullptr;
    ++generation_;
  }
  wake_.notify_all();
  drain();
  std::exception_ptr err;
  {
    std::unique_lock<std::mutex> lock(mutex_);
    done_.wait(lock, [&] { return active_ == 0; });
    body_ = nullptr;
    err = error_;
  }
  if (err) std::rethrow_exception(err);
}

namespace {
std::mutex g_pool_mutex;
std::unique_ptr<ThreadPool> g_pool;
std::size_t g_threads = 1;
}  // namespace

void set_thread_count(std::size_t threads) {
  std::lock_guard<std::mutex> lock(g_pool_mutex);
  threads = std::max<std::size_t>(1, threads);
  if (g_pool && g_threads == threads) return;
  g_pool.reset();
  g_threads = threads;
  g_pool = std::make_unique<ThreadPool>(threads);
}

std::size_t thread_count() {
  std::lock_guard<std::mutex> lock(g_pool_mutex);
  return g_threads;
}

ThreadPool& global_pool() {
  std::lock_guard<std::mutex> lock(g_pool_mutex);
  if (!g_pool) g_pool = std::make_unique<ThreadPool>(g_threads);
  return *g_pool;
}

}  // namespace splitstep
