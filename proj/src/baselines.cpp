#include "dualarm/baselines.hpp"

#include <algorithm>
#include <limits>

namespace dualarm {

namespace {

// Masks as the environment would report them with `remaining` untransferred.
Observation masks_for(const Instance& instance, const std::vector<bool>& remaining) {
  Observation obs;
  obs.object_states.assign(instance.size(), {0.0, 0.0, 0.0, 0.0});
  obs.global_mask = remaining;
  for (ArmId arm : kArms) {
    auto& row = obs.reach_mask[index_of(arm)];
    row.resize(instance.size());
    for (std::size_t i = 0; i < instance.size(); ++i)
      row[i] = remaining[i] && reachable_by(instance.objects[i], arm, instance.config);
  }
  return obs;
}

void mark_done(std::vector<bool>& remaining, const AssignmentPair& pair) {
  if (pair.a1) remaining[*pair.a1] = false;
  if (pair.a2) remaining[*pair.a2] = false;
}

}  // namespace

AssignmentPair random_split_policy(const Observation& obs, Rng& rng) {
  const auto pairs = legal_pairs(obs);
  if (pairs.empty()) throw DomainError("no legal assignment pair");
  return pairs[uniform_index(rng, pairs.size())];
}

AssignmentPair greedy_policy(const RearrangeEnv& env) {
  const auto pairs = legal_pairs(env.observe());
  if (pairs.empty()) throw DomainError("no legal assignment pair");
  const AssignmentPair* best = nullptr;
  long best_steps = std::numeric_limits<long>::max();
  for (const auto& pair : pairs) {
    const long steps = env.preview(pair).m_tau;
    if (steps < best_steps) {
      best_steps = steps;
      best = &pair;
    }
  }
  return *best;
}

PairCostMatrix home_pair_costs(const Instance& instance) {
  const std::size_t n = instance.size();
  const WorkspaceConfig& c = instance.config;
  const Point h1 = home_position(ArmId::One, c);
  const Point h2 = home_position(ArmId::Two, c);
  PairCostMatrix costs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool r1 = reachable_by(instance.objects[i], ArmId::One, c);
    const bool r2 = reachable_by(instance.objects[i], ArmId::Two, c);
    if (r1) costs.solo1[i] = static_cast<double>(plan_round(h1, h2, {i, std::nullopt}, instance).m_tau);
    if (r2) costs.solo2[i] = static_cast<double>(plan_round(h1, h2, {std::nullopt, i}, instance).m_tau);
    if (!r1) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || !reachable_by(instance.objects[j], ArmId::Two, c)) continue;
      costs.at(i, j) = static_cast<double>(plan_round(h1, h2, {i, j}, instance).m_tau);
    }
  }
  return costs;
}

std::vector<AssignmentPair> pair_order_dp(const std::vector<AssignmentPair>& rounds, const Instance& instance,
                                          std::size_t exact_limit) {
  const std::size_t m = rounds.size();
  if (m <= 1) return rounds;
  const WorkspaceConfig& c = instance.config;
  const std::array<Point, 2> home{home_position(ArmId::One, c), home_position(ArmId::Two, c)};

  auto remaining_after = [&](std::size_t done_set) {
    std::vector<bool> remaining(instance.size(), false);
    for (const auto& r : rounds) {
      if (r.a1) remaining[*r.a1] = true;
      if (r.a2) remaining[*r.a2] = true;
    }
    for (std::size_t r = 0; r < m; ++r)
      if (done_set & (std::size_t{1} << r)) mark_done(remaining, rounds[r]);
    return remaining;
  };

  if (m > exact_limit) {
    std::vector<AssignmentPair> order;
    std::vector<bool> used(m, false);
    std::vector<bool> remaining = remaining_after(0);
    std::array<Point, 2> ee = home;
    for (std::size_t step = 0; step < m; ++step) {
      const Observation obs = masks_for(instance, remaining);
      std::size_t best = m;
      long best_steps = std::numeric_limits<long>::max();
      RoundPlan best_plan;
      for (std::size_t r = 0; r < m; ++r) {
        if (used[r] || !is_legal(obs, rounds[r])) continue;
        RoundPlan plan = plan_round(ee[0], ee[1], rounds[r], instance);
        if (plan.m_tau < best_steps) {
          best_steps = plan.m_tau;
          best = r;
          best_plan = std::move(plan);
        }
      }
      if (best == m) throw PlanningError("no legal order for the planned rounds");
      used[best] = true;
      mark_done(remaining, rounds[best]);
      ee = {best_plan.ee1_final, best_plan.ee2_final};
      order.push_back(rounds[best]);
    }
    return order;
  }

  // State (done set, last round). Arm positions are those reached along the
  // best path into the state.
  const std::size_t full = (std::size_t{1} << m) - 1;
  constexpr long kUnset = std::numeric_limits<long>::max();
  std::vector<long> cost((full + 1) * m, kUnset);
  std::vector<std::size_t> parent((full + 1) * m, m);
  std::vector<std::array<Point, 2>> where((full + 1) * m);
  auto cell = [m](std::size_t set, std::size_t last) { return set * m + last; };

  auto expand = [&](std::size_t set, long base, const std::array<Point, 2>& ee, std::size_t from) {
    const Observation obs = masks_for(instance, remaining_after(set));
    for (std::size_t r = 0; r < m; ++r) {
      if (set & (std::size_t{1} << r)) continue;
      if (!is_legal(obs, rounds[r])) continue;
      const RoundPlan plan = plan_round(ee[0], ee[1], rounds[r], instance);
      const std::size_t next = cell(set | (std::size_t{1} << r), r);
      if (base + plan.m_tau < cost[next]) {
        cost[next] = base + plan.m_tau;
        parent[next] = from;
        where[next] = {plan.ee1_final, plan.ee2_final};
      }
    }
  };

  expand(0, 0, home, m);
  for (std::size_t set = 1; set < full; ++set)
    for (std::size_t last = 0; last < m; ++last)
      if (cost[cell(set, last)] != kUnset) expand(set, cost[cell(set, last)], where[cell(set, last)], last);

  std::size_t best_last = m;
  for (std::size_t last = 0; last < m; ++last)
    if (cost[cell(full, last)] != kUnset && (best_last == m || cost[cell(full, last)] < cost[cell(full, best_last)]))
      best_last = last;
  if (best_last == m) throw PlanningError("no legal order for the planned rounds");

  std::vector<AssignmentPair> order;
  std::size_t set = full;
  std::size_t last = best_last;
  while (last != m) {
    order.push_back(rounds[last]);
    const std::size_t prev = parent[cell(set, last)];
    set &= ~(std::size_t{1} << last);
    last = prev;
  }
  std::reverse(order.begin(), order.end());
  return order;
}

std::vector<AssignmentPair> plan_matching_dp(const Instance& instance) {
  const PairCostMatrix costs = home_pair_costs(instance);
  const std::size_t n = instance.size();
  for (std::size_t singles = n % 2; singles <= n; singles += 2) {
    Matching matching;
    try {
      matching = perfect_matching(costs, {singles, 16});
    } catch (const DomainError&) {
      continue;
    }
    return pair_order_dp(matching.rounds, instance);
  }
  throw PlanningError("no feasible pairing for the instance");
}

long simulate_sequence(const Instance& instance, const std::vector<AssignmentPair>& sequence) {
  RearrangeEnv env;
  env.reset(instance);
  for (const auto& pair : sequence) env.step(pair);
  if (!env.done()) throw DomainError("sequence does not transfer every object");
  return env.log().makespan;
}

namespace {

void oracle_search(const RearrangeEnv& env, std::vector<AssignmentPair>& path, OracleResult& best) {
  if (env.done()) {
    if (env.log().makespan < best.makespan) {
      best.makespan = env.log().makespan;
      best.sequence = path;
    }
    return;
  }
  for (const auto& pair : legal_pairs(env.observe())) {
    RearrangeEnv next = env;
    next.step(pair);
    // Every further round costs at least one step while objects remain.
    const long bound = next.log().makespan + (next.done() ? 0 : 1);
    if (bound >= best.makespan) continue;
    path.push_back(pair);
    oracle_search(next, path, best);
    path.pop_back();
  }
}

}  // namespace

OracleResult brute_force_oracle(const Instance& instance) {
  if (instance.size() > kOracleMaxObjects)
    throw DomainError("brute-force oracle refuses n=" + std::to_string(instance.size()) + " > " +
                      std::to_string(kOracleMaxObjects));
  RearrangeEnv env;
  env.reset(instance);
  OracleResult best;
  best.makespan = std::numeric_limits<long>::max();
  std::vector<AssignmentPair> path;
  oracle_search(env, path, best);
  return best;
}

void RandomSplitPolicy::begin_episode(const RearrangeEnv& env) { rng_.seed(batch_seed(seed_, env.instance().seed)); }

AssignmentPair RandomSplitPolicy::decide(const RearrangeEnv& env) { return random_split_policy(env.observe(), rng_); }

AssignmentPair SequencePolicy::decide(const RearrangeEnv& /*env*/) {
  if (next_ >= plan_.size()) throw PlanningError("planned sequence exhausted");
  return plan_[next_++];
}

void MatchingDpPolicy::begin_episode(const RearrangeEnv& env) {
  plan_ = plan_matching_dp(env.instance());
  next_ = 0;
}

void OraclePolicy::begin_episode(const RearrangeEnv& env) {
  plan_ = brute_force_oracle(env.instance()).sequence;
  next_ = 0;
}

}  // namespace dualarm
