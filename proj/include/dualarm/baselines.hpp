#pragma once

// Search-based assignment strategies and an exhaustive optimum for small
// instances. Ties are always broken by pair_less (arm 1 slot, then arm 2
// slot, IDLE last).

#include <cstdint>
#include <vector>

#include "dualarm/env.hpp"
#include "dualarm/matching.hpp"
#include "dualarm/policy.hpp"
#include "dualarm/sampler.hpp"

namespace dualarm {

/// Uniform over the legal pairs of the observation.
AssignmentPair random_split_policy(const Observation& obs, Rng& rng);

/// The legal pair with the shortest planned round from the current state.
AssignmentPair greedy_policy(const RearrangeEnv& env);

/// Round lengths with both arms at their home positions.
PairCostMatrix home_pair_costs(const Instance& instance);

/// Orders rounds to minimise the simulated makespan, carrying arm positions
/// from round to round. Exact subset DP over (done set, last round) up to
/// `exact_limit` rounds; cheapest-next greedy beyond. Only orders in which
/// every round is legal when played are considered.
std::vector<AssignmentPair> pair_order_dp(const std::vector<AssignmentPair>& rounds, const Instance& instance,
                                          std::size_t exact_limit = 12);

/// Full offline plan: matching on home costs with the fewest singleton
/// rounds that admit a feasible pairing, then round ordering.
std::vector<AssignmentPair> plan_matching_dp(const Instance& instance);

/// Simulated makespan of playing `sequence` from the home positions.
long simulate_sequence(const Instance& instance, const std::vector<AssignmentPair>& sequence);

struct OracleResult {
  long makespan = 0;
  std::vector<AssignmentPair> sequence;
};

inline constexpr std::size_t kOracleMaxObjects = 6;

/// Exact optimum over every legal assignment sequence; refuses n > 6.
OracleResult brute_force_oracle(const Instance& instance);

class RandomSplitPolicy : public Policy {
 public:
  explicit RandomSplitPolicy(std::uint64_t seed = 0) : seed_(seed) {}
  std::string name() const override { return "random"; }
  void begin_episode(const RearrangeEnv& env) override;
  AssignmentPair decide(const RearrangeEnv& env) override;

 private:
  std::uint64_t seed_;
  Rng rng_;
};

class GreedyPolicy : public Policy {
 public:
  std::string name() const override { return "greedy"; }
  AssignmentPair decide(const RearrangeEnv& env) override { return greedy_policy(env); }
};

/// Plays a precomputed sequence of rounds.
class SequencePolicy : public Policy {
 public:
  AssignmentPair decide(const RearrangeEnv& env) override;

 protected:
  std::vector<AssignmentPair> plan_;
  std::size_t next_ = 0;
};

class MatchingDpPolicy : public SequencePolicy {
 public:
  std::string name() const override { return "matching_dp"; }
  void begin_episode(const RearrangeEnv& env) override;
};

class OraclePolicy : public SequencePolicy {
 public:
  std::string name() const override { return "oracle"; }
  void begin_episode(const RearrangeEnv& env) override;
};

}  // namespace dualarm
