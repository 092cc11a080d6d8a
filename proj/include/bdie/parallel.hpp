#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace bdie {

/// Execution knob shared by every assembly loop.
///
/// Rows are always accumulated serially in a fixed source order, so results
/// are bit-identical for any worker count; only the distribution of rows over
/// threads changes. `workers == 1` runs the plain loop with no OpenMP region.
struct Exec {
  int workers = 0;  // 0: OpenMP default

  static Exec serial() { return Exec{1}; }
  bool is_serial() const { return workers == 1; }
};

template <class Fn>
void parallel_for(std::ptrdiff_t n, const Exec& exec, Fn&& fn) {
  if (exec.is_serial()) {
    for (std::ptrdiff_t i = 0; i < n; ++i) fn(i);
    return;
  }
#ifdef _OPENMP
  const int threads = exec.workers > 0 ? exec.workers : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 4) num_threads(threads)
  for (std::ptrdiff_t i = 0; i < n; ++i) fn(i);
#else
  for (std::ptrdiff_t i = 0; i < n; ++i) fn(i);
#endif
}

}  // namespace bdie
