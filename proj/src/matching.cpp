#include "dualarm/matching.hpp"

#include <algorithm>
#include <cstdint>
#include <tuple>

namespace dualarm {

double PairCostMatrix::pair_weight(std::size_t i, std::size_t j) const { return std::min(at(i, j), at(j, i)); }

AssignmentPair PairCostMatrix::oriented(std::size_t i, std::size_t j) const {
  const std::size_t lo = std::min(i, j);
  const std::size_t hi = std::max(i, j);
  return at(lo, hi) <= at(hi, lo) ? AssignmentPair{lo, hi} : AssignmentPair{hi, lo};
}

double PairCostMatrix::solo_weight(std::size_t i) const { return std::min(solo1[i], solo2[i]); }

AssignmentPair PairCostMatrix::solo_oriented(std::size_t i) const {
  return solo1[i] <= solo2[i] ? AssignmentPair{i, std::nullopt} : AssignmentPair{std::nullopt, i};
}

double round_cost(const PairCostMatrix& costs, const AssignmentPair& pair) {
  if (pair.a1 && pair.a2) return costs.at(*pair.a1, *pair.a2);
  if (pair.a1) return costs.solo1[*pair.a1];
  if (pair.a2) return costs.solo2[*pair.a2];
  return kInfiniteCost;
}

namespace {

Matching exact_matching(const PairCostMatrix& c, std::size_t singles) {
  const std::size_t n = c.n;
  const std::size_t full = (std::size_t{1} << n) - 1;
  const std::size_t layers = singles + 1;
  std::vector<double> dp((full + 1) * layers, kInfiniteCost);
  // Back-pointer per cell: the round that was added, as (i, j) with j == n
  // for a singleton.
  std::vector<std::pair<std::uint8_t, std::uint8_t>> choice((full + 1) * layers, {0, 0});
  auto cell = [&](std::size_t mask, std::size_t k) { return mask * layers + k; };
  dp[cell(0, 0)] = 0.0;

  for (std::size_t mask = 0; mask < full; ++mask) {
    std::size_t i = 0;
    while (mask & (std::size_t{1} << i)) ++i;
    const std::size_t with_i = mask | (std::size_t{1} << i);
    for (std::size_t k = 0; k < layers; ++k) {
      const double base = dp[cell(mask, k)];
      if (base == kInfiniteCost) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (mask & (std::size_t{1} << j)) continue;
        const double v = base + c.pair_weight(i, j);
        const std::size_t next = cell(with_i | (std::size_t{1} << j), k);
        if (v < dp[next]) {
          dp[next] = v;
          choice[next] = {static_cast<std::uint8_t>(i), static_cast<std::uint8_t>(j)};
        }
      }
      if (k + 1 < layers) {
        const double v = base + c.solo_weight(i);
        const std::size_t next = cell(with_i, k + 1);
        if (v < dp[next]) {
          dp[next] = v;
          choice[next] = {static_cast<std::uint8_t>(i), static_cast<std::uint8_t>(n)};
        }
      }
    }
  }

  std::size_t best_k = 0;
  for (std::size_t k = 1; k < layers; ++k)
    if (dp[cell(full, k)] < dp[cell(full, best_k)]) best_k = k;
  const double total = dp[cell(full, best_k)];
  if (total == kInfiniteCost) throw DomainError("no feasible pairing");

  Matching m;
  m.total = total;
  m.exact = true;
  std::size_t mask = full;
  std::size_t k = best_k;
  while (mask) {
    const auto [i, j] = choice[cell(mask, k)];
    mask &= ~(std::size_t{1} << i);
    if (j == n) {
      m.rounds.push_back(c.solo_oriented(i));
      --k;
    } else {
      m.rounds.push_back(c.oriented(i, j));
      mask &= ~(std::size_t{1} << j);
    }
  }
  std::sort(m.rounds.begin(), m.rounds.end(), pair_less);
  return m;
}

// Greedy matching improved by pair swaps. Singletons are modelled as matches
// against phantom nodes (object-phantom costs the solo round, phantom-phantom
// is free); infinite edges become a large finite penalty so swaps can repair
// them.
Matching heuristic_matching(const PairCostMatrix& c, std::size_t singles) {
  const std::size_t n = c.n;
  const std::size_t nodes = n + singles;
  constexpr double kPenalty = 1e12;
  auto weight = [&](std::size_t u, std::size_t v) {
    double w;
    if (u < n && v < n) {
      w = c.pair_weight(u, v);
    } else if (u < n || v < n) {
      w = c.solo_weight(std::min(u, v));
    } else {
      w = 0.0;
    }
    return w == kInfiniteCost ? kPenalty : w;
  };

  std::vector<std::tuple<double, std::size_t, std::size_t>> edges;
  edges.reserve(nodes * nodes / 2);
  for (std::size_t u = 0; u < nodes; ++u)
    for (std::size_t v = u + 1; v < nodes; ++v) edges.emplace_back(weight(u, v), u, v);
  std::sort(edges.begin(), edges.end());

  std::vector<bool> used(nodes, false);
  std::vector<std::pair<std::size_t, std::size_t>> match;
  for (const auto& [w, u, v] : edges) {
    if (used[u] || used[v]) continue;
    used[u] = used[v] = true;
    match.emplace_back(u, v);
  }

  bool improved = true;
  while (improved) {
    improved = false;
    for (std::size_t a = 0; a < match.size(); ++a) {
      for (std::size_t b = a + 1; b < match.size(); ++b) {
        auto [p, q] = match[a];
        auto [r, s] = match[b];
        const double now = weight(p, q) + weight(r, s);
        const double alt1 = weight(p, r) + weight(q, s);
        const double alt2 = weight(p, s) + weight(q, r);
        if (alt1 < now - 1e-9 && alt1 <= alt2) {
          match[a] = {p, r};
          match[b] = {q, s};
          improved = true;
        } else if (alt2 < now - 1e-9) {
          match[a] = {p, s};
          match[b] = {q, r};
          improved = true;
        }
      }
    }
  }

  Matching m;
  m.exact = false;
  for (auto [u, v] : match) {
    if (u >= n && v >= n) continue;
    if (weight(u, v) >= kPenalty) throw DomainError("no feasible pairing found");
    if (u < n && v < n) {
      m.rounds.push_back(c.oriented(u, v));
      m.total += c.pair_weight(u, v);
    } else {
      const std::size_t i = std::min(u, v);
      m.rounds.push_back(c.solo_oriented(i));
      m.total += c.solo_weight(i);
    }
  }
  std::sort(m.rounds.begin(), m.rounds.end(), pair_less);
  return m;
}

}  // namespace

Matching perfect_matching(const PairCostMatrix& costs, const MatchingOptions& options) {
  if (costs.n == 0) return {};
  if (costs.ordered.size() != costs.n * costs.n || costs.solo1.size() != costs.n || costs.solo2.size() != costs.n)
    throw DomainError("cost matrix has inconsistent dimensions");
  std::size_t singles = std::min(options.max_singletons.value_or(costs.n % 2), costs.n);
  // Singleton count always has the parity of n.
  if ((costs.n + singles) % 2 != 0) {
    if (singles == 0) throw DomainError("odd object count needs a singleton");
    --singles;
  }
  if (costs.n <= std::min<std::size_t>(options.exact_limit, 20)) return exact_matching(costs, singles);
  return heuristic_matching(costs, singles);
}

}  // namespace dualarm
