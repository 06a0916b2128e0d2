#include "dualarm/policy.hpp"

#include <chrono>

namespace dualarm {

EpisodeResult run_episode(Policy& policy, const Instance& instance, const EnvConfig& env_config) {
  using Clock = std::chrono::steady_clock;
  RearrangeEnv env(env_config);
  env.reset(instance);

  Clock::duration spent{};
  auto t0 = Clock::now();
  policy.begin_episode(env);
  spent += Clock::now() - t0;

  while (!env.done()) {
    t0 = Clock::now();
    const AssignmentPair pair = policy.decide(env);
    spent += Clock::now() - t0;
    env.step(pair);
  }

  EpisodeResult result;
  result.log = env.log();
  result.undiscounted_return = env.undiscounted_return();
  result.decision_seconds = std::chrono::duration<double>(spent).count();
  return result;
}

}  // namespace dualarm
