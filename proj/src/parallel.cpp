#include "gemith/parallel.hpp"

#include <atomic>
#include <thread>

namespace gemith {

namespace {
std::atomic<int> g_max_threads{0};
}

int hardware_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
#endif
}

int max_threads() { return g_max_threads.load(); }

void set_max_threads(int n) { g_max_threads.store(n < 0 ? 0 : n); }

namespace detail {
int resolved_threads() {
  int n = g_max_threads.load();
  return n == 0 ? hardware_threads() : n;
}
}  // namespace detail

}  // namespace gemith
