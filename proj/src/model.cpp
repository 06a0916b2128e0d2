#include "dualarm/model.hpp"

#include <cmath>
#include <sstream>
#include <tuple>

namespace dualarm {

std::string to_string(Scheme scheme) { return scheme == Scheme::FS ? "FS" : "CA"; }

Scheme scheme_from_string(const std::string& text) {
  if (text == "FS" || text == "fs") return Scheme::FS;
  if (text == "CA" || text == "ca") return Scheme::CA;
  throw DomainError("unknown sampling scheme '" + text + "' (expected FS or CA)");
}

void WorkspaceConfig::validate() const {
  auto fail = [](const std::string& what) { throw DomainError("invalid workspace config: " + what); };
  if (!(width > 0.0)) fail("width must be positive");
  if (!(height > 0.0)) fail("height must be positive");
  if (!(speed > 0.0)) fail("speed must be positive");
  if (!(d_safe > 0.0)) fail("d_safe must be positive");
  if (pick_dwell < 0 || place_dwell < 0) fail("dwell counts must be non-negative");
  if (!(arm2_x_min > 0.0 && arm2_x_min < arm1_x_max && arm1_x_max < width))
    fail("need 0 < arm2_x_min < arm1_x_max < width");
  if (std::abs((arm1_x_max - arm2_x_min) - width / 2.0) > 1e-9 * width)
    fail("common area must span half the width");
  // A carriage that finished its task can always be moved far enough away
  // for the other arm to reach any target inside its own interval.
  if (d_safe > arm2_x_min || d_safe > width - arm1_x_max)
    fail("d_safe must not exceed the exclusive-area width");
}

Point home_position(ArmId arm, const WorkspaceConfig& config) {
  return arm == ArmId::One ? Point{0.0, 0.0} : Point{config.width, 0.0};
}

Region region_of(double x, const WorkspaceConfig& config) {
  if (!(x >= 0.0 && x <= config.width)) {
    std::ostringstream msg;
    msg << "x=" << x << " outside [0, " << config.width << "]";
    throw DomainError(msg.str());
  }
  if (x < config.arm2_x_min) return Region::ExclusiveLeft;
  if (x > config.arm1_x_max) return Region::ExclusiveRight;
  return Region::Common;
}

bool reachable_by(const ObjectSpec& obj, ArmId arm, const WorkspaceConfig& config) {
  if (arm == ArmId::One) return obj.pick.x <= config.arm1_x_max && obj.place.x <= config.arm1_x_max;
  return obj.pick.x >= config.arm2_x_min && obj.place.x >= config.arm2_x_min;
}

void validate_object(const ObjectSpec& obj, const WorkspaceConfig& config) {
  if (!config.contains(obj.pick) || !config.contains(obj.place))
    throw DomainError("object position outside the workspace");
  if (!reachable_by(obj, ArmId::One, config) && !reachable_by(obj, ArmId::Two, config))
    throw DomainError("object is not operable by either arm");
}

void Instance::validate() const {
  config.validate();
  if (objects.empty()) throw DomainError("instance needs at least one object");
  for (const auto& obj : objects) {
    validate_object(obj, config);
    if (scheme == Scheme::CA) {
      for (double x : {obj.pick.x, obj.place.x}) {
        if (x < config.arm2_x_min || x > config.arm1_x_max)
          throw DomainError("CA instance has a coordinate outside the common area");
      }
    }
  }
}

namespace {
std::size_t slot_key(const Slot& slot) { return slot ? *slot : static_cast<std::size_t>(-1); }
}  // namespace

bool pair_less(const AssignmentPair& lhs, const AssignmentPair& rhs) {
  return std::tuple(slot_key(lhs.a1), slot_key(lhs.a2)) < std::tuple(slot_key(rhs.a1), slot_key(rhs.a2));
}

std::string to_string(const AssignmentPair& pair) {
  auto one = [](const Slot& s) { return s ? std::to_string(*s) : std::string("IDLE"); };
  return "(" + one(pair.a1) + ", " + one(pair.a2) + ")";
}

void EpisodeLog::append(const RoundRecord& record) {
  rounds.push_back(record);
  makespan += record.m_tau;
  delay_total += record.delay;
}

bool EpisodeLog::consistent(std::size_t n) const {
  long steps = 0;
  long delays = 0;
  std::vector<int> seen(n, 0);
  for (const auto& r : rounds) {
    steps += r.m_tau;
    delays += r.delay;
    for (const auto& slot : {r.pair.a1, r.pair.a2}) {
      if (!slot) continue;
      if (*slot >= n) return false;
      ++seen[*slot];
    }
  }
  if (steps != makespan || delays != delay_total || delay_total > makespan) return false;
  for (int count : seen)
    if (count != 1) return false;
  return true;
}

}  // namespace dualarm
