#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

namespace rowamp::par {

// Thread count resolution order: ROWAMP_THREADS env var, then set_threads(),
// then the OpenMP default.  A count of 1 runs everything inline.
int max_threads();
void set_threads(int n);
bool openmp_enabled();

// Parallel loop over [0, n).  Bodies must write disjoint state per index so
// results are schedule-independent.
void parallel_for(std::ptrdiff_t n, const std::function<void(std::ptrdiff_t)>& body);

// Fixed chunk width used by Monte-Carlo reductions.  Chunk boundaries (and
// the per-chunk RNG substreams derived from them) do not depend on the
// thread count, so accumulating per-chunk partials in index order gives
// bit-identical sums for any number of threads.
inline constexpr std::ptrdiff_t kMcChunk = 512;

inline std::ptrdiff_t chunk_count(std::ptrdiff_t n) {
  return (n + kMcChunk - 1) / kMcChunk;
}

}  // namespace rowamp::par
