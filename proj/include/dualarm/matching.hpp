#pragma once

// Minimum-weight pairing of objects into rounds over a transfer graph whose
// edge weights are estimated round lengths.

#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "dualarm/model.hpp"

namespace dualarm {

inline constexpr double kInfiniteCost = std::numeric_limits<double>::infinity();

/// Ordered round costs: at(i, j) is the round length with object i on arm 1
/// and object j on arm 2 (+inf when illegal). solo1/solo2 hold the length of
/// a round where the object is handled alone by arm 1 / arm 2.
struct PairCostMatrix {
  std::size_t n = 0;
  std::vector<double> ordered;
  std::vector<double> solo1;
  std::vector<double> solo2;

  explicit PairCostMatrix(std::size_t size = 0)
      : n(size), ordered(size * size, kInfiniteCost), solo1(size, kInfiniteCost), solo2(size, kInfiniteCost) {}

  double& at(std::size_t i, std::size_t j) { return ordered[i * n + j]; }
  double at(std::size_t i, std::size_t j) const { return ordered[i * n + j]; }

  /// min over the two orientations, and the orientation achieving it
  /// (arm 1 gets the lower index on ties).
  double pair_weight(std::size_t i, std::size_t j) const;
  AssignmentPair oriented(std::size_t i, std::size_t j) const;
  double solo_weight(std::size_t i) const;
  AssignmentPair solo_oriented(std::size_t i) const;
};

struct MatchingOptions {
  /// Singleton rounds allowed; defaults to n % 2.
  std::optional<std::size_t> max_singletons;
  /// Largest n solved exactly by subset dynamic programming.
  std::size_t exact_limit = 16;
};

struct Matching {
  /// Rounds sorted by pair_less.
  std::vector<AssignmentPair> rounds;
  double total = 0.0;
  bool exact = true;
};

/// Throws DomainError when no pairing of finite weight exists.
Matching perfect_matching(const PairCostMatrix& costs, const MatchingOptions& options = {});

/// Cost of one round of a matching under `costs`.
double round_cost(const PairCostMatrix& costs, const AssignmentPair& pair);

}  // namespace dualarm
