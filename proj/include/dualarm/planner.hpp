#pragma once

// Lower-level dual-arm planning for one assignment round: nominal plans,
// step-wise interference detection on the shared x rail, priority choice and
// replanning of the yielding arm.

#include <array>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <vector>

#include "dualarm/model.hpp"

namespace dualarm {

class PlanningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Segment {
  Point target;
  int dwell_after = 0;

  friend bool operator==(const Segment&, const Segment&) = default;
};

/// Go-to-pick, pick dwell, go-to-place, place dwell. Empty for an idle arm.
struct Waypath {
  std::vector<Segment> segments;

  bool empty() const { return segments.empty(); }
  friend bool operator==(const Waypath&, const Waypath&) = default;
};

/// One end-effector position per time step; positions[0] is the start state.
struct DiscreteTrajectory {
  std::vector<Point> positions;

  long steps() const { return static_cast<long>(positions.size()) - 1; }
  /// Position at step t; a finished arm holds its last position.
  Point at(long t) const {
    return t < static_cast<long>(positions.size()) ? positions[static_cast<std::size_t>(t)] : positions.back();
  }
  Point final() const { return positions.back(); }

  friend bool operator==(const DiscreteTrajectory&, const DiscreteTrajectory&) = default;
};

struct RoundPlan {
  DiscreteTrajectory m1;
  DiscreteTrajectory m2;
  long m_tau = 0;
  long delay_steps = 0;
  Point ee1_final;
  Point ee2_final;
  /// Arm that kept its nominal trajectory when a replan was needed.
  std::optional<ArmId> priority;

  friend bool operator==(const RoundPlan&, const RoundPlan&) = default;
};

/// True when the carriages at these x positions are closer than d_safe.
inline bool interferes(double x1, double x2, const WorkspaceConfig& config) { return x2 - x1 < config.d_safe; }

Waypath init_plan(Point ee_start, const ObjectSpec& obj, ArmId arm, const WorkspaceConfig& config);

/// Travel legs take ceil(max(|dx|,|dy|) / speed) steps with both axes
/// interpolated linearly; dwells hold position.
DiscreteTrajectory discretize(const Waypath& path, Point start, const WorkspaceConfig& config);

/// Smallest t >= 1 with x2(t) - x1(t) < d_safe, or nullopt.
std::optional<long> check_collision(const DiscreteTrajectory& m1, const DiscreteTrajectory& m2,
                                    const WorkspaceConfig& config);

struct YieldResult {
  /// The priority trajectory, extended when it had to clear the way after
  /// finishing its own task.
  DiscreteTrajectory priority;
  DiscreteTrajectory yielder;
  /// Steps at which the yielding arm's x was clamped.
  long clamped_steps = 0;
};

/// Clamped following: the yielding arm advances through its waypath at full
/// speed but its x is held at least d_safe away from the priority arm at
/// every step. Dwells start only when they can run to completion. Once the
/// priority arm has finished, it is moved aside at full speed whenever it
/// blocks the yielding arm.
YieldResult replan_yield(const DiscreteTrajectory& priority, ArmId yielder, const Waypath& yield_path,
                         Point yield_start, const WorkspaceConfig& config);

struct PriorityDecision {
  ArmId first = ArmId::One;
  ArmId second = ArmId::Two;
  /// Round length if arm 1 (index 0) or arm 2 (index 1) takes priority.
  std::array<long, 2> predicted_costs{};
  /// The replanned trajectories for the chosen option.
  YieldResult plan;
};

/// Evaluates both yield options and keeps the shorter round; ties go to
/// arm 1. Throws DomainError when the nominal trajectories do not interfere.
PriorityDecision priority_decide(const DiscreteTrajectory& m1, const DiscreteTrajectory& m2,
                                 const std::array<Waypath, 2>& paths, const WorkspaceConfig& config);

/// Plans one synchronous round from the given end-effector positions.
RoundPlan plan_round(Point ee1, Point ee2, const AssignmentPair& pair, const Instance& instance);

/// CSV with header step,x1,y1,x2,y2,gap covering steps 0..m_tau.
void write_trajectory_csv(std::ostream& out, const RoundPlan& plan);

}  // namespace dualarm
