#pragma once

// Round-based rearrangement MDP. Each step publishes one assignment pair,
// plans the round, moves both arms to their final positions and marks the
// assigned objects as transferred.

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dualarm/model.hpp"
#include "dualarm/planner.hpp"

namespace dualarm {

enum class IllegalReason { BothIdle, OutOfRange, Transferred, Duplicate, Unreachable, IdleNotAllowed };

std::string to_string(IllegalReason reason);

class IllegalAction : public std::invalid_argument {
 public:
  IllegalAction(IllegalReason reason, const std::string& what) : std::invalid_argument(what), reason_(reason) {}
  IllegalReason reason() const { return reason_; }

 private:
  IllegalReason reason_;
};

class EpisodeFinished : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct Observation {
  /// End-effector (x/width, y/height) per arm.
  std::array<Point, 2> arm_states{};
  /// Per object (x_s, y_s, x_t, y_t), normalized like the arms.
  std::vector<std::array<double, 4>> object_states;
  /// 1 until the object has been transferred.
  std::vector<bool> global_mask;
  /// reachable_by(object, arm) AND global_mask.
  std::array<std::vector<bool>, 2> reach_mask;

  std::size_t size() const { return object_states.size(); }
  friend bool operator==(const Observation&, const Observation&) = default;
};

enum class RewardMode { PerRound, Terminal };

struct EnvConfig {
  RewardMode reward_mode = RewardMode::PerRound;
  double gamma = 1.0;
};

struct StepInfo {
  long m_tau = 0;
  long delay = 0;
  long round = 0;
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

std::optional<IllegalReason> find_violation(const Observation& obs, const AssignmentPair& pair);

/// Checks a pair against the masks. An arm may idle only when no untransferred
/// object other than the partner's is reachable by it.
void check_legal(const Observation& obs, const AssignmentPair& pair);
bool is_legal(const Observation& obs, const AssignmentPair& pair);

/// Every legal pair, sorted by pair_less.
std::vector<AssignmentPair> legal_pairs(const Observation& obs);

class RearrangeEnv {
 public:
  explicit RearrangeEnv(EnvConfig config = {}) : config_(config) {}

  Observation reset(Instance instance);
  StepResult step(const AssignmentPair& pair);

  Observation observe() const;
  /// Plans the round a pair would produce from the current state without
  /// stepping.
  RoundPlan preview(const AssignmentPair& pair) const;

  const Instance& instance() const { return instance_; }
  const EnvConfig& config() const { return config_; }
  const EpisodeLog& log() const { return log_; }
  Point arm_position(ArmId arm) const { return ee_[index_of(arm)]; }
  const std::vector<bool>& mask() const { return mask_; }
  std::size_t remaining() const { return remaining_; }
  long round() const { return static_cast<long>(log_.rounds.size()); }
  bool done() const { return started_ && remaining_ == 0; }
  bool started() const { return started_; }
  /// Sum of received rewards, and the same sum weighted by gamma^tau (tau from 1).
  double undiscounted_return() const { return return_; }
  double discounted_return() const { return discounted_return_; }

 private:
  EnvConfig config_;
  Instance instance_;
  std::array<Point, 2> ee_{};
  std::vector<bool> mask_;
  std::size_t remaining_ = 0;
  EpisodeLog log_;
  double return_ = 0.0;
  double discounted_return_ = 0.0;
  bool started_ = false;
};

}  // namespace dualarm
