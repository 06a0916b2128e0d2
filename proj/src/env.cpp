#include "dualarm/env.hpp"

#include <algorithm>
#include <cmath>

namespace dualarm {

std::string to_string(IllegalReason reason) {
  switch (reason) {
    case IllegalReason::BothIdle: return "both_idle";
    case IllegalReason::OutOfRange: return "out_of_range";
    case IllegalReason::Transferred: return "transferred";
    case IllegalReason::Duplicate: return "duplicate";
    case IllegalReason::Unreachable: return "unreachable";
    case IllegalReason::IdleNotAllowed: return "idle_not_allowed";
  }
  return "unknown";
}

std::optional<IllegalReason> find_violation(const Observation& obs, const AssignmentPair& pair) {
  const std::size_t n = obs.size();
  if (pair.both_idle()) return IllegalReason::BothIdle;
  for (ArmId arm : kArms) {
    const Slot& slot = pair.slot(arm);
    if (!slot) continue;
    if (*slot >= n) return IllegalReason::OutOfRange;
    if (!obs.global_mask[*slot]) return IllegalReason::Transferred;
    if (!obs.reach_mask[index_of(arm)][*slot]) return IllegalReason::Unreachable;
  }
  if (pair.a1 && pair.a2 && *pair.a1 == *pair.a2) return IllegalReason::Duplicate;
  for (ArmId arm : kArms) {
    if (pair.slot(arm)) continue;
    const Slot& partner = pair.slot(other(arm));
    const auto& reach = obs.reach_mask[index_of(arm)];
    for (std::size_t i = 0; i < n; ++i)
      if (reach[i] && (!partner || *partner != i)) return IllegalReason::IdleNotAllowed;
  }
  return std::nullopt;
}

void check_legal(const Observation& obs, const AssignmentPair& pair) {
  if (auto reason = find_violation(obs, pair))
    throw IllegalAction(*reason, "illegal assignment " + to_string(pair) + ": " + to_string(*reason));
}

bool is_legal(const Observation& obs, const AssignmentPair& pair) { return !find_violation(obs, pair); }

std::vector<AssignmentPair> legal_pairs(const Observation& obs) {
  const std::size_t n = obs.size();
  std::vector<Slot> slots;
  slots.reserve(n + 1);
  for (std::size_t i = 0; i < n; ++i) slots.emplace_back(i);
  slots.emplace_back(std::nullopt);

  std::vector<AssignmentPair> out;
  for (const Slot& a1 : slots) {
    if (a1 && !obs.reach_mask[0][*a1]) continue;
    for (const Slot& a2 : slots) {
      if (a2 && !obs.reach_mask[1][*a2]) continue;
      AssignmentPair p{a1, a2};
      if (is_legal(obs, p)) out.push_back(p);
    }
  }
  return out;
}

Observation RearrangeEnv::reset(Instance instance) {
  instance.validate();
  instance_ = std::move(instance);
  for (ArmId arm : kArms) ee_[index_of(arm)] = home_position(arm, instance_.config);
  mask_.assign(instance_.size(), true);
  remaining_ = instance_.size();
  log_.clear();
  return_ = 0.0;
  discounted_return_ = 0.0;
  started_ = true;
  return observe();
}

Observation RearrangeEnv::observe() const {
  const WorkspaceConfig& c = instance_.config;
  Observation obs;
  for (ArmId arm : kArms) {
    const Point p = ee_[index_of(arm)];
    obs.arm_states[index_of(arm)] = {p.x / c.width, p.y / c.height};
  }
  obs.object_states.reserve(instance_.size());
  for (const auto& o : instance_.objects)
    obs.object_states.push_back({o.pick.x / c.width, o.pick.y / c.height, o.place.x / c.width, o.place.y / c.height});
  obs.global_mask = mask_;
  for (ArmId arm : kArms) {
    auto& row = obs.reach_mask[index_of(arm)];
    row.resize(instance_.size());
    for (std::size_t i = 0; i < instance_.size(); ++i) row[i] = mask_[i] && reachable_by(instance_.objects[i], arm, c);
  }
  return obs;
}

RoundPlan RearrangeEnv::preview(const AssignmentPair& pair) const {
  return plan_round(ee_[0], ee_[1], pair, instance_);
}

StepResult RearrangeEnv::step(const AssignmentPair& pair) {
  if (!started_) throw EpisodeFinished("environment has not been reset");
  if (done()) throw EpisodeFinished("episode already finished");
  check_legal(observe(), pair);

  const RoundPlan plan = preview(pair);
  ee_ = {plan.ee1_final, plan.ee2_final};
  for (const Slot& slot : {pair.a1, pair.a2}) {
    if (slot) {
      mask_[*slot] = false;
      --remaining_;
    }
  }
  log_.append({pair, plan.m_tau, plan.delay_steps});

  StepResult result;
  const bool finished = remaining_ == 0;
  if (config_.reward_mode == RewardMode::PerRound)
    result.reward = -static_cast<double>(plan.m_tau);
  else
    result.reward = finished ? -static_cast<double>(log_.makespan) : 0.0;
  const long tau = round();
  return_ += result.reward;
  discounted_return_ += std::pow(config_.gamma, static_cast<double>(tau)) * result.reward;

  result.observation = observe();
  result.done = finished;
  result.info = {plan.m_tau, plan.delay_steps, tau};
  return result;
}

}  // namespace dualarm
