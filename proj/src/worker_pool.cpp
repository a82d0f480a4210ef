#include "rgbdseg/worker_pool.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

namespace rgbdseg {

WorkerPool::WorkerPool(std::size_t workers) : worker_count_(std::max<std::size_t>(workers, 1)) {
  threads_.reserve(worker_count_ - 1);
  for (std::size_t id = 1; id < worker_count_; ++id) {
    threads_.emplace_back([this, id] { worker_loop(id); });
  }
}

WorkerPool::~WorkerPool() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  start_cv_.notify_all();
  for (auto& t : threads_) {
    t.join();
  }
}

std::pair<std::size_t, std::size_t> WorkerPool::chunk(std::size_t n, std::size_t parts, std::size_t id) {
  const std::size_t base = n / parts;
  const std::size_t extra = n % parts;
  const std::size_t begin = id * base + std::min(id, extra);
  return {begin, begin + base + (id < extra ? 1 : 0)};
}

void WorkerPool::parallel_for(std::size_t n, const RangeFn& fn) {
  if (n == 0) {
    return;
  }
  if (worker_count_ == 1) {
    fn(0, n);
    return;
  }
  {
    std::lock_guard lock(mutex_);
    job_ = &fn;
    job_size_ = n;
    pending_ = worker_count_ - 1;
    error_ = nullptr;
    ++generation_;
  }
  start_cv_.notify_all();

  std::exception_ptr local;
  try {
    const auto [b, e] = chunk(n, worker_count_, 0);
    if (b < e) {
      fn(b, e);
    }
  } catch (...) {
    local = std::current_exception();
  }

  std::unique_lock lock(mutex_);
  done_cv_.wait(lock, [this] { return pending_ == 0; });
  job_ = nullptr;
  if (local) {
    std::rethrow_exception(local);
  }
  if (error_) {
    std::rethrow_exception(error_);
  }
}

void WorkerPool::worker_loop(std::size_t id) {
  std::size_t seen = 0;
  for (;;) {
    const RangeFn* job = nullptr;
    std::size_t n = 0;
    {
      std::unique_lock lock(mutex_);
      start_cv_.wait(lock, [&] { return stopping_ || generation_ != seen; });
      if (stopping_) {
        return;
      }
      seen = generation_;
      job = job_;
      n = job_size_;
    }
    std::exception_ptr err;
    try {
      const auto [b, e] = chunk(n, worker_count_, id);
      if (b < e) {
        (*job)(b, e);
      }
    } catch (...) {
      err = std::current_exception();
    }
    {
      std::lock_guard lock(mutex_);
      if (err && !error_) {
        error_ = err;
      }
      if (--pending_ == 0) {
        done_cv_.notify_one();
      }
    }
  }
}

std::size_t default_worker_count() {
  if (const char* env = std::getenv("RGBD_BGSEG_WORKERS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) {
        return static_cast<std::size_t>(v);
      }
    } catch (const std::exception&) {
      // fall through to the default
    }
  }
  return 1;
}

} // namespace rgbdseg
