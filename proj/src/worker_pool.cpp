#include "crosscheck/worker_pool.hpp"

#include <atomic>
#include <exception>
#include <utility>

namespace crosscheck {

WorkerPool::WorkerPool(int threads) {
  if (threads < 1) threads = 1;
  threads_.reserve(static_cast<std::size_t>(threads));
  for (int i = 0; i < threads; ++i) {
    threads_.emplace_back([this] { worker_loop(); });
  }
}

WorkerPool::~WorkerPool() {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    stopping_ = true;
  }
  cv_.notify_all();
  for (auto& t : threads_) {
    if (t.joinable()) t.join();
  }
}

void WorkerPool::submit(std::function<void()> task) {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    queue_.push_back(std::move(task));
  }
  cv_.notify_one();
}

void WorkerPool::worker_loop() {
  for (;;) {
    std::function<void()> task;
    {
      std::unique_lock<std::mutex> lock(mutex_);
      cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
      if (queue_.empty()) {
        if (stopping_) return;
        continue;
      }
      task = std::move(queue_.front());
      queue_.pop_front();
    }
    task();
  }
}

void parallel_for(WorkerPool* pool, std::size_t count, const std::function<void(std::size_t)>& fn) {
  if (count == 0) return;
  if (pool == nullptr || pool->size() <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }

  struct Barrier {
    std::mutex mutex;
    std::condition_variable cv;
    std::size_t remaining;
    std::exception_ptr first_error;
  };
  auto barrier = std::make_shared<Barrier>();
  barrier->remaining = count;

  for (std::size_t i = 0; i < count; ++i) {
    pool->submit([barrier, i, &fn] {
      std::exception_ptr error;
      try {
        fn(i);
      } catch (...) {
        error = std::current_exception();
      }
      std::lock_guard<std::mutex> lock(barrier->mutex);
      if (error && !barrier->first_error) barrier->first_error = error;
      if (--barrier->remaining == 0) barrier->cv.notify_all();
    });
  }

  std::unique_lock<std::mutex> lock(barrier->mutex);
  barrier->cv.wait(lock, [&] { return barrier->remaining == 0; });
  if (barrier->first_error) std::rethrow_exception(barrier->first_error);
}

}  // namespace crosscheck
