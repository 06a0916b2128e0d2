#pragma once

#include <memory>
#include <string>

#include "dualarm/env.hpp"

namespace dualarm {

/// A higher-level assignment strategy. begin_episode runs once after reset;
/// decide is called once per round and must return a legal pair.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  virtual void begin_episode(const RearrangeEnv& /*env*/) {}
  virtual AssignmentPair decide(const RearrangeEnv& env) = 0;
};

struct EpisodeResult {
  EpisodeLog log;
  double undiscounted_return = 0.0;
  /// Wall-clock seconds spent in begin_episode and decide; round planning
  /// done by the environment itself is excluded.
  double decision_seconds = 0.0;
};

EpisodeResult run_episode(Policy& policy, const Instance& instance, const EnvConfig& env_config = {});

}  // namespace dualarm
