#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "vdi/mode_controller.hpp"
#include "vdi/scenario.hpp"
#include "vdi/tool_tracker.hpp"
#include "vdi/viewpoint_optimizer.hpp"

namespace vdi {

using Rng = std::mt19937_64;

struct MarkerGeometry {
  int id = 0;
  bool in_fov = false;
  bool in_range = false;
  double incidence = 0.0;  ///< [rad]
  bool geometric = false;  ///< all geometric checks pass, before dropout
};

/// Per-marker geometric visibility checks for the given camera and tool poses.
std::vector<MarkerGeometry> marker_geometry(const Pose& camera, const Pose& tool, const MarkerLayout& layout,
                                            const VisibilityConfig& vis);

/// True when `point` lies inside the camera's view cone and range.
bool point_in_view(const Pose& camera, const Vec3& point, const VisibilityConfig& vis);

/**
 * Synthesizes marker sightings. A marker is seen when its center is inside
 * the view cone, within range, its incidence angle is at most
 * max_incidence, and it survives dropout. Sightings carry Gaussian pose
 * noise. The generator draws the same number of samples per marker whatever
 * the outcome, so equal seeds give comparable results across configs.
 */
std::vector<MarkerObservation> visible_markers(const Pose& camera, const Pose& tool, const MarkerLayout& layout,
                                               const VisibilityConfig& vis, const NoiseConfig& noise,
                                               double timestamp, Rng& rng);

Vec3 tool_tip(const Pose& tool, const ContactConfig& contact);

/// Spring contact of the tool tip with the table plane and press-fit slots.
/// Force acts on the tip along +z; torque is about the tool origin.
Vec6 contact_force(const Pose& tool, const ContactConfig& contact);

/// Penetration below the plane of a tip inside slot `i`, or nullopt when the tip is not over it.
std::optional<double> slot_depth(const Vec3& tip, const ContactConfig& contact, std::size_t i);

struct SensorReadings {
  bool fsr_attached = true;
  bool pin_pulled = false;
  Vec6 robot_wrench_est = Vec6::Zero();
  double tool_axial_force = 0.0;
  Vec3 tool_axis = Vec3(0, 0, -1);
  bool device_pressed = false;
  Vec6 device_twist = Vec6::Zero();
};

struct WorldCommands {
  RobotCommand robot;
  std::optional<CameraDecision> camera_target;
  std::optional<Pose> interactive_tool;
};

struct WorldState {
  long tick = 0;
  double time = 0.0;
  bool ended = false;

  Pose tool_true;
  Pose mount;  ///< tool pose on the robot
  CameraDecision camera;
  bool attached = true;
  bool pin_pulled = false;

  // operator and environment inputs
  bool device_pressed = false;
  Vec6 device_twist = Vec6::Zero();
  double hand_pull = 0.0;
  Vec3 external_force = Vec3::Zero();
  std::optional<Pose> follow_offset;  ///< hand-to-mount offset while following the hand

  Vec6 contact_wrench = Vec6::Zero();
  std::vector<int> seated_slots;
  double rolled_distance = 0.0;
  int fsr_chatter_left = 0;
  std::size_t next_event = 0;

  SensorReadings sensors;
  std::vector<MarkerObservation> observations;
};

WorldState initial_world(const Scenario& scenario, Rng& rng);

/// Applies one operator/environment event to the world.
void apply_event(WorldState& world, const Event& event);

/**
 * Advances the world by one tick: applies due timeline events (and
 * `injected`), moves the tool, servos the camera toward its target under the
 * velocity limits, evaluates contact, and synthesizes sensors and marker
 * sightings. Past the scenario duration the state is returned with
 * `ended` set.
 */
WorldState step(const WorldState& world, const WorldCommands& commands, const Scenario& scenario, Rng& rng,
                const std::vector<Event>& injected = {});

}  // namespace vdi
