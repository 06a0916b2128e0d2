#pragma once

// Shared domain types for the dual-arm gantry: workspace geometry, objects,
// instances, assignment pairs and per-episode bookkeeping.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dualarm {

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

enum class ArmId : std::uint8_t { One = 0, Two = 1 };

inline constexpr std::array<ArmId, 2> kArms{ArmId::One, ArmId::Two};

constexpr std::size_t index_of(ArmId arm) { return static_cast<std::size_t>(arm); }
constexpr ArmId other(ArmId arm) { return arm == ArmId::One ? ArmId::Two : ArmId::One; }
constexpr int number_of(ArmId arm) { return arm == ArmId::One ? 1 : 2; }

enum class Region { ExclusiveLeft, Common, ExclusiveRight };

enum class Scheme { FS, CA };

std::string to_string(Scheme scheme);
Scheme scheme_from_string(const std::string& text);

/// Physical description of the gantry. Arm 1 rides the left end of the rail
/// and reaches [0, arm1_x_max]; arm 2 rides the right end and reaches
/// [arm2_x_min, width]. Carriages must keep an x-gap of at least d_safe.
struct WorkspaceConfig {
  double width = 100.0;
  double height = 50.0;
  double speed = 1.0;
  int pick_dwell = 2;
  int place_dwell = 2;
  double d_safe = 10.0;
  double arm1_x_max = 75.0;
  double arm2_x_min = 25.0;

  /// Throws DomainError when any geometric invariant is violated.
  void validate() const;

  double reach_min(ArmId arm) const { return arm == ArmId::One ? 0.0 : arm2_x_min; }
  double reach_max(ArmId arm) const { return arm == ArmId::One ? arm1_x_max : width; }
  bool contains(Point p) const { return p.x >= 0.0 && p.x <= width && p.y >= 0.0 && p.y <= height; }

  friend bool operator==(const WorkspaceConfig&, const WorkspaceConfig&) = default;
};

/// Start-of-episode end-effector position of each arm (the rail extremes).
Point home_position(ArmId arm, const WorkspaceConfig& config);

Region region_of(double x, const WorkspaceConfig& config);

struct ObjectSpec {
  Point pick;
  Point place;

  friend bool operator==(const ObjectSpec&, const ObjectSpec&) = default;
};

bool reachable_by(const ObjectSpec& obj, ArmId arm, const WorkspaceConfig& config);

/// Throws DomainError unless the object lies in the workspace and at least
/// one arm can operate it.
void validate_object(const ObjectSpec& obj, const WorkspaceConfig& config);

struct Instance {
  std::vector<ObjectSpec> objects;
  WorkspaceConfig config;
  Scheme scheme = Scheme::FS;
  std::uint64_t seed = 0;

  std::size_t size() const { return objects.size(); }
  void validate() const;

  friend bool operator==(const Instance&, const Instance&) = default;
};

/// One object index per arm, or nullopt for IDLE.
using Slot = std::optional<std::size_t>;

struct AssignmentPair {
  Slot a1;
  Slot a2;

  const Slot& slot(ArmId arm) const { return arm == ArmId::One ? a1 : a2; }
  bool both_idle() const { return !a1 && !a2; }

  friend bool operator==(const AssignmentPair&, const AssignmentPair&) = default;
};

/// Lexicographic order used for every tie-break in the project: arm 1 slot
/// first, then arm 2 slot; IDLE sorts after every object index.
bool pair_less(const AssignmentPair& lhs, const AssignmentPair& rhs);

std::string to_string(const AssignmentPair& pair);

struct RoundRecord {
  AssignmentPair pair;
  long m_tau = 0;
  long delay = 0;

  friend bool operator==(const RoundRecord&, const RoundRecord&) = default;
};

struct EpisodeLog {
  std::vector<RoundRecord> rounds;
  long makespan = 0;
  long delay_total = 0;

  void append(const RoundRecord& record);
  void clear() { *this = EpisodeLog{}; }
  double delay_proportion() const {
    return makespan > 0 ? static_cast<double>(delay_total) / static_cast<double>(makespan) : 0.0;
  }

  /// Checks the totals and that each of the n objects appears exactly once.
  bool consistent(std::size_t n) const;

  friend bool operator==(const EpisodeLog&, const EpisodeLog&) = default;
};

}  // namespace dualarm
