#pragma once

#include <cstddef>
#include <exception>
#include <mutex>
#include <utility>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gemith {

/// Degree used by parallel_for. 0 (the default) means the hardware value.
int max_threads();
void set_max_threads(int n);
int hardware_threads();

namespace detail {
int resolved_threads();
}

/// Data-parallel loop over [0, count). Body exceptions are captured and
/// rethrown on the calling thread (first one wins). With threads resolved
/// to 1, or without OpenMP, this is a plain serial loop; that serial path
/// is the reference the parallel tests compare against. Bodies must write
/// only to disjoint slots so results are independent of scheduling.
template <class F>
void parallel_for(std::size_t count, F&& fn) {
  const int threads = detail::resolved_threads();
#ifdef _OPENMP
  if (threads > 1 && count > 1) {
    std::exception_ptr error;
    std::mutex error_mutex;
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (long long i = 0; i < static_cast<long long>(count); ++i) {
      try {
        fn(static_cast<std::size_t>(i));
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);
    return;
  }
#endif
  (void)threads;
  for (std::size_t i = 0; i < count; ++i) fn(i);
}

}  // namespace gemith
