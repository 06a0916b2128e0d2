// Acceptance gate. Each criterion prints one PASS/FAIL line with its
// measurement; the exit status is nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "dualarm/attention.hpp"
#include "dualarm/baselines.hpp"
#include "dualarm/bench.hpp"
#include "dualarm/sampler.hpp"
#include "dualarm/server.hpp"
#include "support.hpp"

using namespace dualarm;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void run(const std::string& name, const std::function<Outcome()>& body) {
  Outcome o;
  const auto start = Clock::now();
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  std::printf("%s  %-28s %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(),
              seconds_since(start));
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

NetworkConfig accept_network() { return NetworkConfig{}; }

// Random bundle written and read back through the interchange format.
std::filesystem::path saved_random_bundle() {
  const auto path = std::filesystem::temp_directory_path() / "dualarm_acceptance.darw";
  const NetworkConfig c = accept_network();
  save_weights(path, WeightBundle::random(c, 2024), c);
  return path;
}

std::size_t makespan_identity_violations = 0;
std::size_t makespan_identity_checked = 0;

// Every evaluated episode passes through here.
EpisodeResult checked_episode(Policy& policy, const Instance& inst) {
  const EpisodeResult r = run_episode(policy, inst);
  long sum = 0;
  for (const auto& round : r.log.rounds) sum += round.m_tau;
  ++makespan_identity_checked;
  if (sum != r.log.makespan || -r.undiscounted_return != static_cast<double>(r.log.makespan))
    ++makespan_identity_violations;
  return r;
}

Outcome safety() {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> size(1, 12);
  const auto start = Clock::now();
  long violations = 0, calls = 0, steps = 0;
  const WorkspaceConfig cfg;
  while (calls < 10000) {
    const std::size_t n = size(rng);
    const Instance inst = sample_instance({n, Scheme::CA, rng(), cfg});
    std::uniform_int_distribution<std::size_t> depth(0, n);
    RearrangeEnv env = testing::random_mid_episode(inst, depth(rng), rng);
    if (env.done()) continue;
    const auto pairs = testing::enumerate_legal(env.observe());
    std::uniform_int_distribution<std::size_t> pick(0, pairs.size() - 1);
    const RoundPlan plan =
        plan_round(env.arm_position(ArmId::One), env.arm_position(ArmId::Two), pairs[pick(rng)], inst);
    ++calls;
    const std::size_t len = std::max(plan.m1.positions.size(), plan.m2.positions.size());
    for (std::size_t t = 0; t < len; ++t) {
      ++steps;
      if (plan.m2.at(static_cast<long>(t)).x - plan.m1.at(static_cast<long>(t)).x < cfg.d_safe) ++violations;
    }
  }
  const double elapsed = seconds_since(start);
  return {violations == 0 && elapsed < 60.0,
          fmt("%.0f calls, %.0f steps, ", static_cast<double>(calls), static_cast<double>(steps)) +
              std::to_string(violations) + " violations"};
}

Outcome oracle_dominance(const std::filesystem::path& weights) {
  const std::vector<std::string> specs{"random:5", "greedy", "matching_dp", "attention:" + weights.string()};
  std::vector<PolicyFactory> factories;
  for (const auto& s : specs) factories.emplace_back(s);
  long violations = 0, compared = 0;
  std::size_t instances = 0;
  for (std::size_t n : {2u, 4u, 6u}) {
    for (const Instance& inst : sample_batch(n, Scheme::CA, 200, 300 + n)) {
      ++instances;
      OraclePolicy oracle;
      const long best = checked_episode(oracle, inst).log.makespan;
      for (const auto& f : factories) {
        auto policy = f.create();
        ++compared;
        if (checked_episode(*policy, inst).log.makespan < best) ++violations;
      }
    }
  }
  return {violations == 0, std::to_string(instances) + " instances x 4 policies, " + std::to_string(violations) +
                               " beat the oracle"};
}

Outcome greedy_exhaustive() {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<std::size_t> size(2, 12);
  int mismatches = 0, states = 0;
  while (states < 100) {
    const std::size_t n = size(rng);
    const Instance inst = sample_instance({n, states % 2 ? Scheme::FS : Scheme::CA, rng(), {}});
    std::uniform_int_distribution<std::size_t> depth(0, n / 2);
    const RearrangeEnv env = testing::random_mid_episode(inst, depth(rng), rng);
    if (env.done()) continue;
    ++states;
    // Enumerate, sort by the published order, keep the first strict minimum.
    auto pairs = testing::enumerate_legal(env.observe());
    std::sort(pairs.begin(), pairs.end(), pair_less);
    AssignmentPair best = pairs.front();
    long best_steps = plan_round(env.arm_position(ArmId::One), env.arm_position(ArmId::Two), best, inst).m_tau;
    for (const auto& p : pairs) {
      const long s = plan_round(env.arm_position(ArmId::One), env.arm_position(ArmId::Two), p, inst).m_tau;
      if (s < best_steps) {
        best_steps = s;
        best = p;
      }
    }
    if (!(greedy_policy(env) == best)) ++mismatches;
  }
  return {mismatches == 0, std::to_string(states) + " states, " + std::to_string(mismatches) + " mismatches"};
}

Outcome matching_exactness() {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<std::size_t> size(1, 8);
  std::uniform_real_distribution<double> w(1.0, 100.0), u(0.0, 1.0);
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = size(rng);
    PairCostMatrix c(n);
    const double holes = trial % 3 == 0 ? 0.3 : 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      c.solo1[i] = u(rng) < holes ? kInfiniteCost : std::round(w(rng));
      c.solo2[i] = u(rng) < holes ? kInfiniteCost : std::round(w(rng));
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) c.at(i, j) = u(rng) < holes ? kInfiniteCost : std::round(w(rng));
    }
    const std::size_t singles = n % 2 + (trial % 4 == 0 && n >= 3 ? 2 : 0);
    // Best over every admissible singleton count up to the limit.
    double want = kInfiniteCost;
    for (std::size_t s = n % 2; s <= singles; s += 2) want = std::min(want, testing::enumerate_pairings(c, s));
    double got = kInfiniteCost;
    try {
      const Matching m = perfect_matching(c, {singles, 16});
      got = m.total;
      double recomputed = 0.0;
      for (const auto& r : m.rounds) recomputed += round_cost(c, r);
      if (recomputed != m.total || !m.exact) ++mismatches;
    } catch (const DomainError&) {
    }
    if (got != want) ++mismatches;
  }
  return {mismatches == 0, "1000 matrices, " + std::to_string(mismatches) + " mismatches"};
}

Outcome directional() {
  const auto instances = sample_batch(10, Scheme::CA, 1000, 606);
  double make[2] = {0, 0}, delay[2] = {0, 0};
  RandomSplitPolicy random(7);
  GreedyPolicy greedy;
  Policy* policies[2] = {&random, &greedy};
  for (const auto& inst : instances) {
    for (int k = 0; k < 2; ++k) {
      const EpisodeResult r = checked_episode(*policies[k], inst);
      make[k] += static_cast<double>(r.log.makespan);
      delay[k] += static_cast<double>(r.log.delay_total) / static_cast<double>(r.log.makespan);
    }
  }
  const double mr = make[0] / 1000, mg = make[1] / 1000, dr = delay[0] / 1000, dg = delay[1] / 1000;
  const double gain = 1.0 - mg / mr;
  return {gain >= 0.05 && dg < dr,
          fmt("makespan random %.2f greedy %.2f (gain %.3f), ", mr, mg, gain) +
              fmt("delay proportion random %.4f greedy %.4f", dr, dg)};
}

Outcome complexity(const std::filesystem::path& weights) {
  const std::vector<std::size_t> ns{4, 6, 10, 14, 20, 30};
  const auto start = Clock::now();
  const TimingTable attention = bench_time({"attention:" + weights.string()}, ns, Scheme::CA, 20, 7);
  const double t_att = seconds_since(start);
  const auto mid = Clock::now();
  const TimingTable greedy = bench_time({"greedy"}, ns, Scheme::CA, 20, 7);
  const double t_greedy = seconds_since(mid);
  const double sa = attention.slopes.begin()->second;
  const double sg = greedy.slopes.begin()->second;
  return {sa <= 1.3 && sg >= 2.5 && t_att < 600 && t_greedy < 600,
          fmt("slope attention %.3f greedy %.3f, ", sa, sg) + fmt("runs %.1f s / %.1f s", t_att, t_greedy)};
}

Observation random_observation(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Observation obs;
  obs.arm_states = {Point{u(rng) * 0.75, u(rng)}, Point{0.25 + u(rng) * 0.75, u(rng)}};
  for (std::size_t i = 0; i < n; ++i) obs.object_states.push_back({u(rng), u(rng), u(rng), u(rng)});
  obs.global_mask.resize(n);
  for (std::size_t i = 0; i < n; ++i) obs.global_mask[i] = u(rng) < 0.7;
  obs.global_mask[0] = true;
  for (std::size_t k = 0; k < 2; ++k) {
    obs.reach_mask[k].resize(n);
    for (std::size_t i = 0; i < n; ++i) obs.reach_mask[k][i] = obs.global_mask[i] && u(rng) < 0.85;
  }
  obs.reach_mask[0][0] = true;
  return obs;
}

Outcome masked_softmax_suite(const AttentionNetwork& net) {
  std::mt19937_64 rng(41);
  std::uniform_int_distribution<std::size_t> size(1, 40);
  int bad = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Observation obs = random_observation(size(rng), rng);
    const PolicyOutput out = net.forward(obs);
    for (std::size_t k = 0; k < 2; ++k) {
      double sum = 0.0;
      bool any = false;
      for (std::size_t j = 0; j < obs.size(); ++j) {
        const double p = out.probs[k][j];
        if (!obs.reach_mask[k][j] && p != 0.0) ++bad;
        if (!std::isfinite(p) || p < 0.0) ++bad;
        any = any || obs.reach_mask[k][j];
        sum += p;
      }
      if (any) worst = std::max(worst, std::abs(sum - 1.0));
      if (any && std::abs(sum - 1.0) > 1e-6) ++bad;
    }
    if (!is_legal(obs, out.chosen)) ++bad;
    // All-masked rows must be refused by the softmax.
    Vec dead = Vec::Constant(static_cast<Eigen::Index>(obs.size()), -std::numeric_limits<float>::infinity());
    try {
      masked_softmax(dead);
      ++bad;
    } catch (const DomainError&) {
    }
  }
  return {bad == 0, "1000 observations, " + std::to_string(bad) + " violations, " + fmt("max |sum-1| %.2e", worst)};
}

Outcome permutation_suite(const AttentionNetwork& net) {
  std::mt19937_64 rng(51);
  std::uniform_int_distribution<std::size_t> size(2, 40);
  int bad = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Observation obs = random_observation(size(rng), rng);
    const std::size_t n = obs.size();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Observation shuffled = obs;
    for (std::size_t i = 0; i < n; ++i) {
      shuffled.object_states[i] = obs.object_states[perm[i]];
      shuffled.global_mask[i] = obs.global_mask[perm[i]];
      for (std::size_t k = 0; k < 2; ++k) shuffled.reach_mask[k][i] = obs.reach_mask[k][perm[i]];
    }
    const Mat a = net.encode_objects(obs.object_states);
    const Mat b = net.encode_objects(shuffled.object_states);
    for (std::size_t i = 0; i < n; ++i) {
      const float d = (b.row(static_cast<Eigen::Index>(i)) - a.row(static_cast<Eigen::Index>(perm[i]))).cwiseAbs().maxCoeff();
      const float scale = 1.0f + a.row(static_cast<Eigen::Index>(perm[i])).cwiseAbs().maxCoeff();
      worst = std::max(worst, static_cast<double>(d / scale));
      if (d > 1e-4f * scale) ++bad;
    }
    const PolicyOutput pa = net.forward(obs), pb = net.forward(shuffled);
    for (std::size_t k = 0; k < 2; ++k)
      for (std::size_t i = 0; i < n; ++i) {
        const double d = std::abs(pb.probs[k][i] - pa.probs[k][perm[i]]);
        worst = std::max(worst, d);
        if (d > 1e-5) ++bad;
      }
  }
  return {bad == 0, "1000 permutations, " + std::to_string(bad) + " violations, " + fmt("max deviation %.2e", worst)};
}

Outcome wire_parity() {
  int mismatches = 0;
  std::size_t steps = 0;
  std::mt19937_64 rng(61);
  for (std::uint64_t episode = 0; episode < 50; ++episode) {
    const std::size_t n = 2 + episode % 12;
    const Scheme scheme = episode % 2 ? Scheme::FS : Scheme::CA;
    EnvSession session;
    RearrangeEnv env;
    const json reset = json::parse(session.handle_line(
        json{{"id", episode}, {"cmd", "reset"}, {"n", n}, {"scheme", to_string(scheme)}, {"seed", 1000 + episode}}
            .dump()));
    Observation obs = env.reset(sample_instance({n, scheme, 1000 + episode, {}}));
    if (reset["id"] != episode || reset["obs"] != to_json(obs)) ++mismatches;
    while (!env.done()) {
      const auto pairs = legal_pairs(obs);
      const AssignmentPair pair = pairs[uniform_index(rng, pairs.size())];
      const json step = json::parse(session.handle_line(json{{"id", steps},
                                                             {"cmd", "step"},
                                                             {"a1", pair.a1 ? json(*pair.a1) : json(-1)},
                                                             {"a2", pair.a2 ? json(*pair.a2) : json(-1)}}
                                                            .dump()));
      const StepResult r = env.step(pair);
      obs = r.observation;
      const json want = {{"id", steps},
                         {"obs", to_json(r.observation)},
                         {"reward", r.reward},
                         {"done", r.done},
                         {"info", {{"m_tau", r.info.m_tau}, {"delay", r.info.delay}, {"round", r.info.round}}}};
      if (step != want) ++mismatches;
      ++steps;
    }
    if (session.env().log().makespan != env.log().makespan) ++mismatches;
  }
  return {mismatches == 0, "50 episodes, " + std::to_string(steps) + " steps, " + std::to_string(mismatches) +
                               " mismatches"};
}

}  // namespace

int main() {
  const auto weights = saved_random_bundle();
  const NetworkConfig config = read_sidecar(weights);
  const AttentionNetwork net(config, load_weights(weights, config));

  run("safety", safety);
  run("oracle-dominance", [&] { return oracle_dominance(weights); });
  run("greedy-exhaustive", greedy_exhaustive);
  run("matching-exactness", matching_exactness);
  run("directional", directional);
  run("complexity-slopes", [&] { return complexity(weights); });
  run("masked-softmax", [&] { return masked_softmax_suite(net); });
  run("permutation-equivariance", [&] { return permutation_suite(net); });
  run("wire-parity", wire_parity);
  run("makespan-identity", [] {
    return Outcome{makespan_identity_violations == 0 && makespan_identity_checked > 0,
                   std::to_string(makespan_identity_checked) + " episodes, " +
                       std::to_string(makespan_identity_violations) + " violations"};
  });

  std::printf("%s: %d criteria failed\n", failures ? "FAILED" : "ALL PASSED", failures);
  return failures ? 1 : 0;
}
