#pragma once

#include <cstdint>
#include <random>

namespace facecamo {

using Rng = std::mt19937_64;

// Uniform double in [lo, hi) built from the top 53 bits of one draw, so the
// sequence is identical across standard libraries.
inline double uniform(Rng& rng, double lo, double hi) {
  const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * unit;
}

// Uniform integer in [0, n).
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  // Lemire-free simple rejection; n is always small here.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return r % n;
}

// Box-Muller standard normal, portable across standard libraries.
double standard_normal(Rng& rng);

// Derives an independent stream seed from a base seed and a tag.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag);

}  // namespace facecamo
