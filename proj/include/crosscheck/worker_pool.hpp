#pragma once

#include <condition_variable>
#include <cstddef>
#include <deque>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace crosscheck {

// Fixed-size task pool. Tasks must not submit work back into the same pool
// and then wait on it; the pipeline avoids that by giving each component its
// own pool.
class WorkerPool {
 public:
  explicit WorkerPool(int threads);
  ~WorkerPool();

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  void submit(std::function<void()> task);
  int size() const { return static_cast<int>(threads_.size()); }

 private:
  void worker_loop();

  std::vector<std::thread> threads_;
  std::deque<std::function<void()>> queue_;
  std::mutex mutex_;
  std::condition_variable cv_;
  bool stopping_ = false;
};

// Runs fn(i) for i in [0, count). Serial when pool is null or single-threaded,
// otherwise fans out and blocks until every task finished. The first exception
// thrown by any task is rethrown in the caller after all tasks drain.
void parallel_for(WorkerPool* pool, std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace crosscheck
