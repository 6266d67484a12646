#pragma once

// Fan-out over independent jobs (seeds, places) with results kept in input order.

#include <algorithm>
#include <cstddef>
#include <future>
#include <thread>
#include <vector>

namespace boundarylab {

/// Number of worker threads; 0 means hardware concurrency.
inline std::size_t worker_count(std::size_t requested = 0) {
  if (requested != 0) return requested;
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/**
 * out[i] = f(in[i]). Jobs are split into contiguous chunks, one per worker, so
 * the output order never depends on scheduling. f must not share mutable state.
 */
template <class T, class F>
auto parallel_map(const std::vector<T>& in, F f, std::size_t workers = 0) {
  using R = decltype(f(in.front()));
  std::vector<R> out(in.size());
  const std::size_t w = std::min(worker_count(workers), std::max<std::size_t>(1, in.size()));
  if (w <= 1) {
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = f(in[i]);
    return out;
  }
  std::vector<std::future<void>> jobs;
  const std::size_t chunk = (in.size() + w - 1) / w;
  for (std::size_t lo = 0; lo < in.size(); lo += chunk) {
    const std::size_t hi = std::min(in.size(), lo + chunk);
    jobs.push_back(std::async(std::launch::async, [&, lo, hi] {
      for (std::size_t i = lo; i < hi; ++i) out[i] = f(in[i]);
    }));
  }
  // get() rethrows the first failure after every job has finished.
  for (auto& j : jobs) j.wait();
  for (auto& j : jobs) j.get();
  return out;
}

}  // namespace boundarylab
