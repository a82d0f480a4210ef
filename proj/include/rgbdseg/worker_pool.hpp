#pragma once

#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace rgbdseg {

/// Fixed set of threads that split index ranges into contiguous chunks.
/// The calling thread works on chunk 0, so a pool of size 1 spawns nothing.
class WorkerPool {
public:
  using RangeFn = std::function<void(std::size_t begin, std::size_t end)>;

  explicit WorkerPool(std::size_t workers = 1);
  ~WorkerPool();
  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  std::size_t size() const { return worker_count_; }

  /// Runs fn over [0, n) split into size() contiguous ranges and blocks until
  /// all of them have finished. The first exception thrown by any chunk is
  /// rethrown here.
  void parallel_for(std::size_t n, const RangeFn& fn);

private:
  void worker_loop(std::size_t id);
  static std::pair<std::size_t, std::size_t> chunk(std::size_t n, std::size_t parts, std::size_t id);

  std::size_t worker_count_;
  std::vector<std::thread> threads_;

  std::mutex mutex_;
  std::condition_variable start_cv_;
  std::condition_variable done_cv_;
  std::size_t generation_ = 0;
  std::size_t pending_ = 0;
  bool stopping_ = false;
  const RangeFn* job_ = nullptr;
  std::size_t job_size_ = 0;
  std::exception_ptr error_;
};

/// Default worker count: RGBD_BGSEG_WORKERS if set and positive, else 1.
std::size_t default_worker_count();

} // namespace rgbdseg
