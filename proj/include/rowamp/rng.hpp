#pragma once

#include <cstdint>
#include <random>

#include "rowamp/types.hpp"

namespace rowamp {

// Deterministic random stream.  A stream remembers the seed it was built
// from so independent substreams can be derived for parallel chunks; the
// substream layout is part of the reproducibility contract.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  double uniform();            // U[0,1)
  double normal();             // N(0,1)
  cplx cnormal();              // CN(0,1): (g1 + i g2)/sqrt(2)
  std::uint64_t integer();     // raw 64-bit draw

  // Independent stream derived from (seed, idx); stable across calls.
  Rng substream(std::uint64_t idx) const;

  std::uint64_t seed() const { return seed_; }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

// SplitMix64 step, used for seed derivation.
std::uint64_t mix_seed(std::uint64_t x);

}  // namespace rowamp
