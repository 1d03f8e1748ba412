#include "rowamp/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rowamp::par {

namespace {

std::atomic<int> g_threads{0};  // 0 = unset

int env_threads() {
  const char* s = std::getenv("ROWAMP_THREADS");
  if (!s || !*s) return 0;
  const long v = std::strtol(s, nullptr, 10);
  return v > 0 ? static_cast<int>(v) : 0;
}

}  // namespace

void set_threads(int n) { g_threads.store(n > 0 ? n : 0); }

bool openmp_enabled() {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

int max_threads() {
  if (const int e = env_threads()) return e;
  if (const int s = g_threads.load()) return s;
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void parallel_for(std::ptrdiff_t n, const std::function<void(std::ptrdiff_t)>& body) {
  const int nt = max_threads();
#ifdef _OPENMP
  if (nt > 1 && n > 1) {
#pragma omp parallel for schedule(static) num_threads(nt)
    for (std::ptrdiff_t i = 0; i < n; ++i) body(i);
    return;
  }
#else
  (void)nt;
#endif
  for (std::ptrdiff_t i = 0; i < n; ++i) body(i);
}

}  // namespace rowamp::par
