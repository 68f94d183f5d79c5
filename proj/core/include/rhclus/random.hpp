#pragma once

#include <cstdint>
#include <random>

namespace rhclus {

// std::mt19937_64 output is fully specified by the standard, but the
// distributions are not; draws go through this helper so sampled rows are
// identical across standard libraries.
using Rng = std::mt19937_64;

/// Uniform integer in [0, bound) by rejection sampling. bound must be > 0.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t bound) {
  const std::uint64_t limit = Rng::max() - (Rng::max() % bound + 1) % bound;
  std::uint64_t draw = rng();
  while (draw > limit) draw = rng();
  return draw % bound;
}

}  // namespace rhclus
