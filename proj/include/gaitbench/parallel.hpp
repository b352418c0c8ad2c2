#pragma once

#include <exception>
#include <vector>

#include <omp.h>

namespace gaitbench {

/// Runs fn(i) for i in [0, n) across `threads` OpenMP threads (<= 0: runtime default).
/// Exceptions are captured per index; the lowest failing index is rethrown, so the
/// reported error does not depend on scheduling.
template <typename Fn>
void omp_for_each(long n, int threads, Fn&& fn) {
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  const int team = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(team)
  for (long i = 0; i < n; ++i) {
    try {
      fn(i);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace gaitbench
