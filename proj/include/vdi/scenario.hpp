#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vdi/mode_controller.hpp"
#include "vdi/se3.hpp"
#include "vdi/tool_tracker.hpp"
#include "vdi/viewpoint_optimizer.hpp"

namespace vdi {

struct Keyframe {
  double t = 0.0;
  Pose pose;
};

/// Piecewise pose timeline: linear in position, slerp in rotation. Clamped
/// to the first/last keyframe outside its time span.
struct Trajectory {
  std::vector<Keyframe> keys;

  Pose at(double t) const;
  double start() const { return keys.empty() ? 0.0 : keys.front().t; }
  double end() const { return keys.empty() ? 0.0 : keys.back().t; }
};

struct VisibilityConfig {
  double fov_half_angle = 0.6;  ///< [rad]
  double min_range = 0.05;      ///< [m]
  double max_range = 1.0;       ///< [m]
  double max_incidence = 1.1;   ///< [rad] between marker normal and marker-to-camera ray
  double dropout_prob = 0.05;

  void validate() const;
};

struct NoiseConfig {
  double sigma_pos = 0.005;  ///< marker position noise [m]
  double sigma_rot = 0.02;   ///< marker rotation noise [rad]
  int fsr_chatter_ticks = 2; ///< contact sensor reads random values for this many ticks after a change

  void validate() const;
};

struct Slot {
  double x = 0.0;
  double y = 0.0;
  double radius = 0.01;
  double depth = 0.005;       ///< press-fit travel until seated [m]
  double stiffness = 4000.0;  ///< fitting resistance while pressing [N/m]
};

struct ContactConfig {
  double plane_height = 0.0;
  double stiffness = 5000.0;  ///< [N/m]
  double tip_offset = 0.12;   ///< tool tip along tool +z [m]
  std::vector<Slot> slots;

  void validate() const;
};

enum class EventKind { PullPin, Reattach, Device, HandPull, ExternalForce };

std::string_view to_string(EventKind kind);
std::optional<EventKind> event_kind_from_string(std::string_view name);

struct Event {
  double t = 0.0;
  EventKind kind = EventKind::PullPin;
  bool pressed = false;           ///< Device
  Vec6 twist = Vec6::Zero();      ///< Device, unit-less input in world axes
  double newtons = 0.0;           ///< HandPull, along tool +z
  Vec3 force = Vec3::Zero();      ///< ExternalForce on the robot, world frame
};

struct Goals {
  int min_fittings = 0;
  double min_rolled_distance = 0.0;
  std::vector<Mode> require_modes;
};

struct Scenario {
  std::string name;
  std::string description;
  double duration = 10.0;
  double tick = 0.02;
  std::uint64_t seed = 1;
  bool initially_attached = true;
  bool interactive = false;  ///< tool pose driven by the client; runs until stopped
  Trajectory trajectory;
  std::optional<Pose> mount_pose;  ///< tool pose on the robot at start; defaults to trajectory(0)
  MarkerLayout layout;
  OptimizerConfig optimizer;
  ControllerConfig controller;
  TrackerConfig tracker;
  VisibilityConfig visibility;
  NoiseConfig noise;
  ContactConfig contact;
  std::vector<Event> events;  ///< sorted by time
  std::map<std::string, double> marks;  ///< named instants for analysis
  Goals goals;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
  long tick_count() const;
};

/// Five markers: four around the barrel, tilted toward the tip, and one on
/// the front face (+x). Nothing on the top face (-z).
MarkerLayout default_marker_layout();

std::vector<Scenario> builtin_scenarios();
std::optional<Scenario> builtin_scenario(std::string_view name);

}  // namespace vdi
