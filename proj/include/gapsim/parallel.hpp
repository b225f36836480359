#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <type_traits>
#include <vector>

namespace gapsim {

// Runs fn(task_index) for every index in [0, n_tasks) on up to `workers`
// threads and returns the results ordered by task index. Callers reduce the
// returned vector in index order, so outputs do not depend on scheduling.
// If tasks throw, the exception of the lowest failing index is rethrown.
template <class Fn>
auto parallel_map(std::size_t n_tasks, unsigned workers, Fn&& fn)
    -> std::vector<std::invoke_result_t<Fn&, std::size_t>> {
  using Result = std::invoke_result_t<Fn&, std::size_t>;
  std::vector<std::optional<Result>> slots(n_tasks);
  std::vector<std::exception_ptr> errors(n_tasks);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n_tasks) return;
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  const unsigned n_threads =
      static_cast<unsigned>(std::min<std::size_t>(std::max(1u, workers), n_tasks));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<Result> out;
  out.reserve(n_tasks);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

// Splits n_items into tasks of at most chunk items each.
struct Chunking {
  std::size_t n_items;
  std::size_t chunk;

  std::size_t n_tasks() const { return chunk == 0 ? 0 : (n_items + chunk - 1) / chunk; }
  std::size_t begin(std::size_t task) const { return task * chunk; }
  std::size_t end(std::size_t task) const { return std::min(n_items, (task + 1) * chunk); }
};

}  // namespace gapsim
