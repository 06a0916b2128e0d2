#pragma once

// Reproducible FS / CA instance generation.
//
// Sampler v1: std::mt19937_64 seeded directly with the instance seed. Each
// object draws pick.x, pick.y, place.x, place.y in that order; a real in
// [a, b] is a + (b - a) * u with u = (next() >> 11) * 2^-53. Under FS an
// object whose pick and place land in opposite exclusive areas is discarded
// and redrawn in full. Batch member k of a batch seeded with s uses
// batch_seed(s, k).

#include <cstdint>
#include <random>
#include <vector>

#include "dualarm/model.hpp"

namespace dualarm {

inline constexpr int kSamplerVersion = 1;

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) from the top 53 bits of one draw.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Unbiased index in [0, k) by rejection; k must be positive.
std::size_t uniform_index(Rng& rng, std::size_t k);

/// SplitMix64 finalizer over (base + k).
std::uint64_t batch_seed(std::uint64_t base, std::uint64_t k);

struct SamplerSpec {
  std::size_t n = 10;
  Scheme scheme = Scheme::CA;
  std::uint64_t seed = 0;
  WorkspaceConfig config;
};

Instance sample_instance(const SamplerSpec& spec);

std::vector<Instance> sample_batch(std::size_t n, Scheme scheme, std::size_t count, std::uint64_t seed,
                                   const WorkspaceConfig& config = {});

}  // namespace dualarm
