#include <condition_variable>
#include <deque>
#include <future>
#include <memory>
#include <mutex>
#include <thread>

#include "flow/ops.hpp"

namespace flow {

namespace {

// Bounded producer buffer. The worker reserves a slot before pulling, so
// upstream is never pulled more than (delivered + capacity) times.
struct PrefetchState {
  explicit PrefetchState(Flow up, std::size_t cap) : upstream(std::move(up)), capacity(cap) {}

  ~PrefetchState() {
    {
      std::lock_guard lk(m);
      stopped = true;
    }
    space.notify_all();
    if (worker.joinable()) worker.join();
  }

  void run() {
    for (;;) {
      {
        std::unique_lock lk(m);
        space.wait(lk, [&] { return stopped || buffer.size() < capacity; });
        if (stopped) return;
      }
      PullResult r = [&]() -> PullResult {
        try {
          return upstream.pull();
        } catch (const std::exception& e) {
          return Error{"prefetch", e.what()};
        }
      }();
      bool terminal = !r.is_element();
      {
        std::lock_guard lk(m);
        buffer.push_back(std::move(r));
      }
      items.notify_one();
      if (terminal) return;
    }
  }

  PullResult pull() {
    std::unique_lock lk(m);
    if (!worker.joinable()) worker = std::thread([this] { run(); });
    items.wait(lk, [&] { return !buffer.empty(); });
    PullResult r = std::move(buffer.front());
    buffer.pop_front();
    space.notify_one();
    return r;
  }

  Flow upstream;
  std::size_t capacity;
  std::mutex m;
  std::condition_variable space, items;
  std::deque<PullResult> buffer;
  bool stopped = false;
  std::thread worker;
};

// Fixed worker pool draining a queue of packaged tasks.
struct WorkerPool {
  explicit WorkerPool(std::size_t n) {
    threads.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
      threads.emplace_back([this] { run(); });
  }

  ~WorkerPool() {
    {
      std::lock_guard lk(m);
      shutdown = true;
    }
    ready.notify_all();
    for (auto& t : threads) t.join();
  }

  void submit(std::packaged_task<Element()> task) {
    {
      std::lock_guard lk(m);
      tasks.push_back(std::move(task));
    }
    ready.notify_one();
  }

  void run() {
    for (;;) {
      std::packaged_task<Element()> task;
      {
        std::unique_lock lk(m);
        ready.wait(lk, [&] { return shutdown || !tasks.empty(); });
        if (shutdown) return;  // remaining tasks are dropped with the pool
        task = std::move(tasks.front());
        tasks.pop_front();
      }
      task();
    }
  }

  std::mutex m;
  std::condition_variable ready;
  std::deque<std::packaged_task<Element()>> tasks;
  bool shutdown = false;
  std::vector<std::thread> threads;
};

}  // namespace

Processor prefetch(std::size_t capacity) {
  if (capacity == 0) throw std::invalid_argument("prefetch capacity must be at least 1");
  return Processor("prefetch", [capacity](Flow in) {
    auto st = std::make_shared<PrefetchState>(std::move(in), capacity);
    return Flow::from_pull([st]() { return st->pull(); });
  });
}

Processor parallel_map(std::function<Element(Element)> fn, std::size_t workers,
                       std::size_t window) {
  if (workers == 0) throw std::invalid_argument("parallel_map needs at least one worker");
  if (window < workers) throw std::invalid_argument("parallel_map window must be >= workers");
  return Processor("parallel_map", [fn = std::move(fn), workers, window](Flow in) {
    struct State {
      std::shared_ptr<WorkerPool> pool;
      Flow upstream;
      std::deque<std::future<Element>> pending;
      std::optional<PullResult> terminal;
    };
    auto st = std::make_unique<State>();
    st->upstream = std::move(in);
    return Flow::from_pull([fn, workers, window, st = std::move(st)]() mutable -> PullResult {
      if (!st->pool) st->pool = std::make_shared<WorkerPool>(workers);
      // Keep up to `window` elements in flight, in input order.
      while (!st->terminal && st->pending.size() < window) {
        PullResult r = st->upstream.pull();
        if (!r.is_element()) {
          st->terminal = std::move(r);
          break;
        }
        std::packaged_task<Element()> task(
            [fn, e = std::move(r.element())]() mutable { return fn(std::move(e)); });
        st->pending.push_back(task.get_future());
        st->pool->submit(std::move(task));
      }
      if (st->pending.empty()) return st->terminal ? std::move(*st->terminal) : PullResult(End{});
      std::future<Element> next = std::move(st->pending.front());
      st->pending.pop_front();
      try {
        return next.get();
      } catch (const std::exception& e) {
        return Error{"parallel_map", e.what()};
      }
    });
  });
}

}  // namespace flow
