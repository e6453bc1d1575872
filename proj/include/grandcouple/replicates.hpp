#pragma once

#include <cstddef>
#include <exception>
#include <vector>

#include <omp.h>

namespace grandcouple {

// Runs fn(r) for r in [0, n) and returns results in replicate order.
// Each replicate must derive its own stream from r, so the output does not
// depend on scheduling.
template <class Fn>
auto run_replicates_serial(std::size_t n, Fn&& fn) {
  using T = decltype(fn(std::size_t{0}));
  std::vector<T> out;
  out.reserve(n);
  for (std::size_t r = 0; r < n; ++r) out.push_back(fn(r));
  return out;
}

template <class Fn>
auto run_replicates_parallel(std::size_t n, int workers, Fn&& fn) {
  using T = decltype(fn(std::size_t{0}));
  std::vector<T> out(n);
  std::exception_ptr err;
  const auto nn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
  for (std::ptrdiff_t r = 0; r < nn; ++r) {
    try {
      out[static_cast<std::size_t>(r)] = fn(static_cast<std::size_t>(r));
    } catch (...) {
#pragma omp critical(grandcouple_replicate_error)
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
  return out;
}

// workers <= 1 takes the serial path.
template <class Fn>
auto run_replicates(std::size_t n, int workers, Fn&& fn) {
  if (workers <= 1) return run_replicates_serial(n, fn);
  return run_replicates_parallel(n, workers, fn);
}

}  // namespace grandcouple
