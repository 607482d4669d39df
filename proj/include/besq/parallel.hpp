#pragma once

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace besq {

/// BESSEL_WORKERS wins over the requested count; 0 means one worker per hardware thread.
inline unsigned resolve_workers(unsigned requested = 0) {
  if (const char* env = std::getenv("BESSEL_WORKERS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (...) {
    }
  }
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(acc, i) for i in [0, count) over contiguous blocks, one accumulator per
/// worker, then folds the accumulators in block order with merge(into, from).
template <class Acc, class Body, class Merge>
Acc parallel_reduce(std::size_t count, unsigned workers, const Acc& init, Body body, Merge merge) {
  workers = static_cast<unsigned>(std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(count, 1)));
  std::vector<Acc> acc(workers, init);
  auto run = [&](unsigned w) {
    const std::size_t lo = count * w / workers, hi = count * (w + 1) / workers;
    for (std::size_t i = lo; i < hi; ++i) body(acc[w], i);
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run, w);
  }
  Acc out = std::move(acc[0]);
  for (unsigned w = 1; w < workers; ++w) merge(out, acc[w]);
  return out;
}

template <class Body>
void parallel_for(std::size_t count, unsigned workers, Body body) {
  struct None {};
  parallel_reduce(count, workers, None{}, [&](None&, std::size_t i) { body(i); }, [](None&, const None&) {});
}

}  // namespace besq
