#pragma once

// Helpers and independent reference computations shared by the test suites.
// Nothing here calls into the code under test except for types and the
// instance/plan data being checked.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dualarm/env.hpp"
#include "dualarm/matching.hpp"
#include "dualarm/model.hpp"
#include "dualarm/planner.hpp"

namespace testing {

using namespace dualarm;

inline long count_char(const std::string& s, char c) { return static_cast<long>(std::count(s.begin(), s.end(), c)); }

inline ObjectSpec obj(double px, double py, double qx, double qy) { return {{px, py}, {qx, qy}}; }

inline Instance make_instance(std::vector<ObjectSpec> objects, Scheme scheme = Scheme::FS,
                              const WorkspaceConfig& config = {}) {
  Instance inst;
  inst.objects = std::move(objects);
  inst.config = config;
  inst.scheme = scheme;
  return inst;
}

inline DiscreteTrajectory constant_x(double x, long steps) {
  DiscreteTrajectory t;
  t.positions.assign(static_cast<std::size_t>(steps) + 1, Point{x, 0.0});
  return t;
}

inline DiscreteTrajectory from_xs(const std::vector<double>& xs) {
  DiscreteTrajectory t;
  for (double x : xs) t.positions.push_back({x, 0.0});
  return t;
}

// Linear scan over every step, with finished arms held at their last point.
inline std::optional<long> scan_first_violation(const DiscreteTrajectory& a, const DiscreteTrajectory& b,
                                                double d_safe) {
  const std::size_t len = std::max(a.positions.size(), b.positions.size());
  for (std::size_t t = 1; t < len; ++t) {
    const double x1 = a.positions[std::min(t, a.positions.size() - 1)].x;
    const double x2 = b.positions[std::min(t, b.positions.size() - 1)].x;
    if (x2 - x1 < d_safe) return static_cast<long>(t);
  }
  return std::nullopt;
}

inline double min_gap(const RoundPlan& plan) {
  double g = std::numeric_limits<double>::infinity();
  const std::size_t len = std::max(plan.m1.positions.size(), plan.m2.positions.size());
  for (std::size_t t = 0; t < len; ++t) {
    const double x1 = plan.m1.positions[std::min(t, plan.m1.positions.size() - 1)].x;
    const double x2 = plan.m2.positions[std::min(t, plan.m2.positions.size() - 1)].x;
    g = std::min(g, x2 - x1);
  }
  return g;
}

inline double max_axis_step(const DiscreteTrajectory& t) {
  double m = 0.0;
  for (std::size_t i = 1; i < t.positions.size(); ++i)
    m = std::max({m, std::abs(t.positions[i].x - t.positions[i - 1].x),
                  std::abs(t.positions[i].y - t.positions[i - 1].y)});
  return m;
}

// All perfect pairings of `items` (plus `singles` objects left alone),
// enumerated recursively; returns the minimum total under `costs`.
inline double enumerate_pairings(const PairCostMatrix& costs, std::size_t singles) {
  std::vector<std::size_t> rest(costs.n);
  std::iota(rest.begin(), rest.end(), 0);
  std::function<double(std::vector<std::size_t>, std::size_t)> go = [&](std::vector<std::size_t> left,
                                                                         std::size_t solo) -> double {
    if (left.empty()) return solo == 0 ? 0.0 : kInfiniteCost;
    const std::size_t i = left.front();
    std::vector<std::size_t> tail(left.begin() + 1, left.end());
    double best = kInfiniteCost;
    if (solo > 0) {
      const double w = std::min(costs.solo1[i], costs.solo2[i]);
      if (w < kInfiniteCost) best = std::min(best, w + go(tail, solo - 1));
    }
    for (std::size_t k = 0; k < tail.size(); ++k) {
      const std::size_t j = tail[k];
      const double w = std::min(costs.at(i, j), costs.at(j, i));
      if (w == kInfiniteCost) continue;
      std::vector<std::size_t> next = tail;
      next.erase(next.begin() + static_cast<long>(k));
      best = std::min(best, w + go(next, solo));
    }
    return best;
  };
  return go(rest, singles);
}

// Enumerates legal pairs straight from the masks, independent of the
// environment's own enumeration: every ordered (a1, a2) over objects and
// IDLE, keeping those where each named object is reachable by its arm, the
// two differ, and an idle arm has nothing else it could take.
inline std::vector<AssignmentPair> enumerate_legal(const Observation& obs) {
  const std::size_t n = obs.global_mask.size();
  std::vector<AssignmentPair> out;
  auto can_idle = [&](int arm, const Slot& partner) {
    for (std::size_t i = 0; i < n; ++i)
      if (obs.reach_mask[static_cast<std::size_t>(arm)][i] && !(partner && *partner == i)) return false;
    return true;
  };
  for (std::size_t a = 0; a <= n; ++a) {
    for (std::size_t b = 0; b <= n; ++b) {
      const Slot s1 = a == n ? Slot{} : Slot{a};
      const Slot s2 = b == n ? Slot{} : Slot{b};
      if (!s1 && !s2) continue;
      if (s1 && s2 && *s1 == *s2) continue;
      if (s1 && !obs.reach_mask[0][*s1]) continue;
      if (s2 && !obs.reach_mask[1][*s2]) continue;
      if (!s1 && !can_idle(0, s2)) continue;
      if (!s2 && !can_idle(1, s1)) continue;
      out.push_back({s1, s2});
    }
  }
  return out;
}

// Drives a fresh environment through `steps` random legal rounds.
template <class Rng>
inline RearrangeEnv random_mid_episode(const Instance& inst, std::size_t steps, Rng& rng) {
  RearrangeEnv env;
  env.reset(inst);
  for (std::size_t s = 0; s < steps && !env.done(); ++s) {
    const auto pairs = enumerate_legal(env.observe());
    std::uniform_int_distribution<std::size_t> pick(0, pairs.size() - 1);
    env.step(pairs[pick(rng)]);
  }
  return env;
}

}  // namespace testing

namespace testing {

// x-only reference model for one arm following waypoints at integer speed.
// targets: (x, dwell) pairs.
using Targets = std::vector<std::pair<double, int>>;

inline std::vector<double> nominal_1d(double start, const Targets& targets, double speed = 1.0) {
  std::vector<double> xs{start};
  double pos = start;
  for (const auto& [x, dwell] : targets) {
    while (pos != x) {
      pos = x > pos ? std::min(x, pos + speed) : std::max(x, pos - speed);
      xs.push_back(pos);
    }
    xs.insert(xs.end(), static_cast<std::size_t>(dwell), pos);
  }
  return xs;
}

struct Follow {
  std::vector<double> priority;
  std::vector<double> yielder;
};

// Reference clamped following on the rail. The yielder (arm 1 keeps left,
// arm 2 keeps right) steps toward its waypoint, is held d_safe away from the
// priority arm, starts a dwell only when the gap holds for all of it, and a
// finished priority arm is shoved aside one speed unit per step when it
// blocks the yielder's next move.
inline Follow follow_1d(std::vector<double> prio, int yielder_arm, const Targets& targets, double start,
                        const WorkspaceConfig& c) {
  const double d = c.d_safe;
  const bool left = yielder_arm == 1;
  auto ok = [&](double y, double p) { return left ? p - y >= d : y - p >= d; };
  auto clampx = [&](double y, double p) { return left ? std::min(y, p - d) : std::max(y, p + d); };
  const long prio_end = static_cast<long>(prio.size()) - 1;
  auto at = [&](long t) { return t < static_cast<long>(prio.size()) ? prio[static_cast<std::size_t>(t)] : prio.back(); };

  std::vector<double> out{start};
  double pos = start;
  std::size_t seg = 0;
  bool done = targets.empty();
  long done_at = 0, last_move = 0;
  for (;;) {
    const long t = static_cast<long>(out.size());
    if (!done && pos == targets[seg].first) {
      const int dwell = targets[seg].second;
      bool clear = true;
      for (long u = t; u < t + dwell; ++u) clear = clear && ok(pos, at(u));
      if (clear) {
        out.insert(out.end(), static_cast<std::size_t>(dwell), pos);
        if (++seg == targets.size()) {
          done = true;
          done_at = static_cast<long>(out.size()) - 1;
        }
        continue;
      }
    }
    if (done && t > prio_end) break;
    double want = pos;
    const bool travelling = !done && pos != targets[seg].first;
    if (travelling) {
      const double x = targets[seg].first;
      want = x > pos ? std::min(x, pos + c.speed) : std::max(x, pos - c.speed);
    }
    double p = at(t);
    if (t > prio_end && travelling && !ok(want, p)) {
      p = left ? std::min({p + c.speed, want + d, c.width}) : std::max({p - c.speed, want - d, 0.0});
      while (static_cast<long>(prio.size()) < t) prio.push_back(prio.back());
      prio.push_back(p);
    }
    const double next = clampx(want, p);
    if (next != pos) last_move = t;
    pos = next;
    out.push_back(pos);
  }
  out.resize(static_cast<std::size_t>(std::max(done_at, last_move)) + 1);
  return {prio, out};
}

// True when the trajectory reaches every waypoint in order and holds it for
// the waypoint's dwell. Where it ends up afterwards is not checked: a
// finished arm may be pushed aside.
inline bool completes(const DiscreteTrajectory& traj, const std::vector<std::pair<Point, int>>& waypoints) {
  std::size_t t = 0;
  for (const auto& [target, dwell] : waypoints) {
    for (;; ++t) {
      if (t + static_cast<std::size_t>(dwell) >= traj.positions.size()) return false;
      bool held = true;
      for (std::size_t u = t; u <= t + static_cast<std::size_t>(dwell) && held; ++u) held = traj.positions[u] == target;
      if (held) break;
    }
    t += static_cast<std::size_t>(dwell);
  }
  return true;
}

inline std::vector<double> xs_of(const DiscreteTrajectory& t) {
  std::vector<double> xs;
  for (const auto& p : t.positions) xs.push_back(p.x);
  return xs;
}

}  // namespace testing
