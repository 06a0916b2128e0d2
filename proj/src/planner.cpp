#include "dualarm/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace dualarm {

namespace {

constexpr long kMaxRoundSteps = 1'000'000;

long leg_steps(Point from, Point to, double speed) {
  const double dist = std::max(std::abs(to.x - from.x), std::abs(to.y - from.y));
  if (dist == 0.0) return 0;
  // Rounding noise from clamped restarts must not cost a whole extra step.
  return std::max(1L, static_cast<long>(std::ceil(dist / speed - 1e-9)));
}

Point leg_point(Point from, Point to, long s, long k) {
  if (s >= k) return to;
  const double ks = static_cast<double>(s), kk = static_cast<double>(k);
  return {from.x + (to.x - from.x) * ks / kk, from.y + (to.y - from.y) * ks / kk};
}

// Largest x for arm 1 (or smallest for arm 2) that keeps the gap to the
// other carriage, starting from `x` and moving only if needed.
double clamp_to_gap(ArmId mover, double x, double other_x, const WorkspaceConfig& c) {
  if (mover == ArmId::One) {
    if (!interferes(x, other_x, c)) return x;
    double lim = other_x - c.d_safe;
    while (interferes(lim, other_x, c)) lim = std::nextafter(lim, -std::numeric_limits<double>::infinity());
    return lim;
  }
  if (!interferes(other_x, x, c)) return x;
  double lim = other_x + c.d_safe;
  while (interferes(other_x, lim, c)) lim = std::nextafter(lim, std::numeric_limits<double>::infinity());
  return lim;
}

bool gap_ok(ArmId yielder, Point yielder_pos, Point prio_pos, const WorkspaceConfig& c) {
  return yielder == ArmId::One ? !interferes(yielder_pos.x, prio_pos.x, c) : !interferes(prio_pos.x, yielder_pos.x, c);
}

void require_reach(ArmId arm, Point p, const WorkspaceConfig& c) {
  if (p.x < c.reach_min(arm) || p.x > c.reach_max(arm) || !c.contains(p))
    throw DomainError("waypoint outside the reach of arm " + std::to_string(number_of(arm)));
}

}  // namespace

Waypath init_plan(Point ee_start, const ObjectSpec& obj, ArmId arm, const WorkspaceConfig& config) {
  if (!reachable_by(obj, arm, config))
    throw DomainError("object not reachable by arm " + std::to_string(number_of(arm)));
  require_reach(arm, ee_start, config);
  return Waypath{{{obj.pick, config.pick_dwell}, {obj.place, config.place_dwell}}};
}

DiscreteTrajectory discretize(const Waypath& path, Point start, const WorkspaceConfig& config) {
  DiscreteTrajectory traj;
  traj.positions.push_back(start);
  Point cur = start;
  for (const auto& seg : path.segments) {
    const long k = leg_steps(cur, seg.target, config.speed);
    for (long s = 1; s <= k; ++s) traj.positions.push_back(leg_point(cur, seg.target, s, k));
    cur = seg.target;
    traj.positions.insert(traj.positions.end(), static_cast<std::size_t>(std::max(seg.dwell_after, 0)), cur);
  }
  return traj;
}

std::optional<long> check_collision(const DiscreteTrajectory& m1, const DiscreteTrajectory& m2,
                                    const WorkspaceConfig& config) {
  if (m1.positions.empty() || m2.positions.empty()) throw DomainError("empty trajectory");
  if (interferes(m1.at(0).x, m2.at(0).x, config)) throw DomainError("trajectories start in interference");
  const long horizon = std::max(m1.steps(), m2.steps());
  for (long t = 1; t <= horizon; ++t)
    if (interferes(m1.at(t).x, m2.at(t).x, config)) return t;
  return std::nullopt;
}

YieldResult replan_yield(const DiscreteTrajectory& priority, ArmId yielder, const Waypath& yield_path,
                         Point yield_start, const WorkspaceConfig& c) {
  if (priority.positions.empty()) throw DomainError("empty priority trajectory");
  if (!gap_ok(yielder, yield_start, priority.at(0), c)) throw DomainError("replan starts in interference");
  for (const auto& seg : yield_path.segments) require_reach(yielder, seg.target, c);

  const ArmId prio_arm = other(yielder);
  const long prio_end = priority.steps();
  std::vector<Point> prio = priority.positions;
  auto prio_at = [&](long t) { return t < static_cast<long>(prio.size()) ? prio[static_cast<std::size_t>(t)] : prio.back(); };

  enum class Mode { Travel, AwaitDwell, Dwell, Done };
  const auto& segs = yield_path.segments;
  std::size_t seg = 0;
  Mode mode = Mode::Done;
  Point pos = yield_start;
  Point leg_from = pos;
  long leg_k = 0;
  long leg_s = 0;
  long dwell_left = 0;
  long done_at = 0;
  long last_move = 0;
  long clamped = 0;
  long t = 0;

  auto begin_segment = [&] {
    if (seg >= segs.size()) {
      mode = Mode::Done;
      done_at = t - 1;
      return;
    }
    mode = Mode::Travel;
    leg_from = pos;
    leg_k = leg_steps(pos, segs[seg].target, c.speed);
    leg_s = 0;
  };
  if (!segs.empty()) {
    t = 1;
    begin_segment();
  }

  std::vector<Point> out{yield_start};
  for (t = 1;; ++t) {
    if (t > kMaxRoundSteps) throw PlanningError("replan did not converge");
    for (;;) {
      if (mode == Mode::Travel && leg_s == leg_k) {
        mode = Mode::AwaitDwell;
      } else if ((mode == Mode::AwaitDwell && segs[seg].dwell_after <= 0) || (mode == Mode::Dwell && dwell_left == 0)) {
        ++seg;
        begin_segment();
      } else {
        break;
      }
    }
    if (mode == Mode::Done && t > prio_end) break;

    if (mode == Mode::AwaitDwell) {
      const long d = segs[seg].dwell_after;
      bool clear = true;
      for (long u = t; u < t + d && clear; ++u) clear = gap_ok(yielder, pos, prio_at(u), c);
      if (clear) {
        mode = Mode::Dwell;
        dwell_left = d;
      }
    }
    if (mode == Mode::Dwell) {
      if (!gap_ok(yielder, pos, prio_at(t), c)) throw PlanningError("dwell interrupted by interference");
      --dwell_left;
      out.push_back(pos);
      continue;
    }

    Point desired = mode == Mode::Travel ? leg_point(leg_from, segs[seg].target, leg_s + 1, leg_k) : pos;
    Point p = prio_at(t);
    if (t > prio_end && mode == Mode::Travel && !gap_ok(yielder, desired, p, c)) {
      // The priority arm is parked in the way: move it aside.
      const double needed = std::clamp(clamp_to_gap(prio_arm, p.x, desired.x, c), 0.0, c.width);
      if (std::abs(needed - p.x) <= c.speed)
        p.x = needed;
      else
        p.x = prio_arm == ArmId::Two ? std::min(p.x + c.speed, c.width) : std::max(p.x - c.speed, 0.0);
      while (static_cast<long>(prio.size()) < t) prio.push_back(prio.back());
      prio.push_back(p);
    }

    Point actual = desired;
    actual.x = clamp_to_gap(yielder, desired.x, p.x, c);
    if (actual.x != desired.x) {
      ++clamped;
      if (mode == Mode::AwaitDwell) mode = Mode::Travel;
      if (mode == Mode::Travel) {
        leg_from = actual;
        leg_k = leg_steps(actual, segs[seg].target, c.speed);
        leg_s = 0;
      }
    } else if (mode == Mode::Travel) {
      ++leg_s;
    }
    if (!(actual == pos)) last_move = t;
    pos = actual;
    out.push_back(pos);
  }

  out.resize(static_cast<std::size_t>(std::max(done_at, last_move)) + 1);
  YieldResult result;
  result.priority.positions = std::move(prio);
  result.yielder.positions = std::move(out);
  result.clamped_steps = clamped;
  return result;
}

PriorityDecision priority_decide(const DiscreteTrajectory& m1, const DiscreteTrajectory& m2,
                                 const std::array<Waypath, 2>& paths, const WorkspaceConfig& config) {
  if (!check_collision(m1, m2, config)) throw DomainError("priority_decide called without interference");

  YieldResult one_first = replan_yield(m1, ArmId::Two, paths[1], m2.at(0), config);
  YieldResult two_first = replan_yield(m2, ArmId::One, paths[0], m1.at(0), config);
  const long cost_one = std::max(one_first.priority.steps(), one_first.yielder.steps());
  const long cost_two = std::max(two_first.priority.steps(), two_first.yielder.steps());

  PriorityDecision d;
  d.predicted_costs = {cost_one, cost_two};
  if (cost_one <= cost_two) {
    d.first = ArmId::One;
    d.second = ArmId::Two;
    d.plan = std::move(one_first);
  } else {
    d.first = ArmId::Two;
    d.second = ArmId::One;
    d.plan = std::move(two_first);
  }
  return d;
}

RoundPlan plan_round(Point ee1, Point ee2, const AssignmentPair& pair, const Instance& instance) {
  const WorkspaceConfig& c = instance.config;
  if (pair.both_idle()) throw DomainError("assignment pair with both arms idle");
  if (pair.a1 && pair.a2 && *pair.a1 == *pair.a2) throw DomainError("both arms assigned the same object");
  if (interferes(ee1.x, ee2.x, c)) throw DomainError("arms start closer than d_safe");

  std::array<Waypath, 2> paths;
  const std::array<Point, 2> starts{ee1, ee2};
  for (ArmId arm : kArms) {
    const Slot& slot = pair.slot(arm);
    if (!slot) continue;
    if (*slot >= instance.size()) throw DomainError("object index out of range");
    paths[index_of(arm)] = init_plan(starts[index_of(arm)], instance.objects[*slot], arm, c);
  }

  DiscreteTrajectory n1 = discretize(paths[0], ee1, c);
  DiscreteTrajectory n2 = discretize(paths[1], ee2, c);
  const long nominal = std::max(n1.steps(), n2.steps());

  RoundPlan plan;
  if (!check_collision(n1, n2, c)) {
    plan.m1 = std::move(n1);
    plan.m2 = std::move(n2);
  } else {
    PriorityDecision d = priority_decide(n1, n2, paths, c);
    plan.priority = d.first;
    if (d.first == ArmId::One) {
      plan.m1 = std::move(d.plan.priority);
      plan.m2 = std::move(d.plan.yielder);
    } else {
      plan.m1 = std::move(d.plan.yielder);
      plan.m2 = std::move(d.plan.priority);
    }
    if (check_collision(plan.m1, plan.m2, c)) throw PlanningError("interference remains after replanning");
  }
  plan.m_tau = std::max(plan.m1.steps(), plan.m2.steps());
  plan.delay_steps = plan.m_tau - nominal;
  if (plan.delay_steps < 0) throw PlanningError("replanned round shorter than nominal");
  plan.ee1_final = plan.m1.final();
  plan.ee2_final = plan.m2.final();
  return plan;
}

void write_trajectory_csv(std::ostream& out, const RoundPlan& plan) {
  out << "step,x1,y1,x2,y2,gap\n";
  for (long t = 0; t <= plan.m_tau; ++t) {
    const Point a = plan.m1.at(t);
    const Point b = plan.m2.at(t);
    out << t << ',' << a.x << ',' << a.y << ',' << b.x << ',' << b.y << ',' << (b.x - a.x) << '\n';
  }
}

}  // namespace dualarm
