#pragma once

#include <optional>
#include <vector>

#include "vdi/mode_controller.hpp"
#include "vdi/scenario.hpp"
#include "vdi/sim_world.hpp"
#include "vdi/tool_tracker.hpp"
#include "vdi/viewpoint_optimizer.hpp"

namespace vdi {

/// Everything observable about one control tick.
struct TickRecord {
  long tick = 0;
  double time = 0.0;
  Mode mode = Mode::Idle;
  Signals signals;
  bool input_error = false;
  RobotCommand command;
  Pose tool_true;
  std::optional<ToolEstimate> estimate;  ///< latest published estimate
  bool published = false;                ///< an estimate was published this tick
  TrackingStatus tracking = TrackingStatus::Lost;
  CameraDecision camera;
  std::optional<ObjectiveTerms> objectives;  ///< against the estimate
  ObjectiveTerms objectives_true;            ///< against the true tool position
  Vec6 contact_wrench = Vec6::Zero();
  Vec6 robot_wrench = Vec6::Zero();
  double tool_axial_force = 0.0;
  double discrepancy = 0.0;
  bool attached = true;
  bool pin_pulled = false;
  std::vector<int> visible;
  bool tip_in_view = false;
  int fittings = 0;
  double rolled_distance = 0.0;
};

/**
 * Closed loop of simulated world, tool tracker, mode controller and camera
 * viewpoint optimizer. Deterministic for a given scenario and seed.
 *
 * Each advance() handles the current world tick (fuse sightings, step the
 * controller, re-plan the camera on every published estimate) and then
 * moves the world one tick forward under the resulting commands.
 */
class Session {
 public:
  explicit Session(Scenario scenario);

  bool done() const { return world_.ended; }
  TickRecord advance();

  /// Operator input applied at the next world tick.
  void inject(const Event& event) { injected_.push_back(event); }
  /// Detached tool pose override; the scripted trajectory is ignored while set.
  void set_tool_pose(const Pose& pose) { interactive_tool_ = pose; }
  /// Replaces the configuration sections (not the timeline) after validation.
  void update_config(const Scenario& updated);

  const Scenario& scenario() const { return scenario_; }
  const WorldState& world() const { return world_; }
  const ModeState& mode_state() const { return mode_; }
  const TrackerState& tracker() const { return tracker_; }
  const std::optional<CameraDecision>& camera_target() const { return target_; }

 private:
  Scenario scenario_;
  Rng rng_;
  WorldState world_;
  TrackerState tracker_;
  ModeState mode_;
  InputDebouncer debouncer_;
  std::optional<CameraDecision> target_;
  std::optional<Pose> interactive_tool_;
  std::vector<Event> injected_;
};

/// Runs a scenario to completion and returns every tick.
std::vector<TickRecord> run_session(const Scenario& scenario);

}  // namespace vdi
