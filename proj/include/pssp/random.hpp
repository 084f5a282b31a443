#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace pssp {

/// Engine used for every stochastic choice. mt19937_64 is fully specified by
/// the standard, and the helpers below avoid the implementation-defined
/// distributions so that streams are identical across platforms.
using Rng = std::mt19937_64;

/// Mixes (seed, purpose, index) into an independent 64-bit seed.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose, std::uint64_t index = 0) noexcept;

/// Uniform integer in [0, n) by rejection sampling. n must be > 0.
std::uint64_t uniform_index(Rng& rng, std::uint64_t n);

/// Uniform real in [0, 1) with 53 random bits.
double uniform_unit(Rng& rng);

/// Uniform real in [lo, hi).
inline double uniform_real(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform_unit(rng); }

/// In-place Fisher-Yates shuffle using uniform_index.
template <typename RandomIt>
void shuffle(RandomIt first, RandomIt last, Rng& rng) {
  const auto n = static_cast<std::uint64_t>(last - first);
  for (std::uint64_t i = n; i > 1; --i) {
    const auto j = uniform_index(rng, i);
    using std::swap;
    swap(first[i - 1], first[j]);
  }
}

}  // namespace pssp
