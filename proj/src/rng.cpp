#include "rowamp/rng.hpp"

namespace rowamp {

std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(mix_seed(seed)) {}

double Rng::uniform() { return uniform_(engine_); }

double Rng::normal() { return normal_(engine_); }

cplx Rng::cnormal() {
  const double re = normal_(engine_);
  const double im = normal_(engine_);
  return cplx(re, im) * (1.0 / std::sqrt(2.0));
}

std::uint64_t Rng::integer() { return engine_(); }

Rng Rng::substream(std::uint64_t idx) const {
  return Rng(mix_seed(seed_ ^ mix_seed(idx + 1)));
}

}  // namespace rowamp
