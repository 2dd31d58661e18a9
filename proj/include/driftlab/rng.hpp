#pragma once

#include <cstdint>
#include <random>

namespace driftlab {

using Rng = std::mt19937_64;

/// Seeds are mixed through seed_seq so neighbouring seeds give unrelated streams.
/// `stream` separates independent consumers of the same seed.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

// std::uniform_real_distribution is implementation-defined; this keeps paths
// identical across standard libraries.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

}  // namespace driftlab
