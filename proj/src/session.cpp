#include "vdi/session.hpp"

#include <stdexcept>

namespace vdi {

Session::Session(Scenario scenario)
    : scenario_(std::move(scenario)),
      rng_(scenario_.seed),
      tracker_(scenario_.tracker, scenario_.layout),
      debouncer_(scenario_.controller.debounce_ticks) {
  scenario_.validate();
  world_ = initial_world(scenario_, rng_);
}

void Session::update_config(const Scenario& updated) {
  updated.validate();
  scenario_.optimizer = updated.optimizer;
  scenario_.controller = updated.controller;
  scenario_.tracker = updated.tracker;
  scenario_.visibility = updated.visibility;
  scenario_.noise = updated.noise;
  scenario_.contact = updated.contact;
  tracker_.config = updated.tracker;
  world_.camera = project(scenario_.optimizer, world_.camera);
  if (target_) target_ = project(scenario_.optimizer, *target_);
}

TickRecord Session::advance() {
  if (done()) throw std::logic_error("session has ended");
  const WorldState& w = world_;
  const Pose camera = camera_pose(scenario_.optimizer, w.camera);

  if (!is_natural(mode_.mode)) tracker_ = TrackerState(scenario_.tracker, scenario_.layout);
  tracker_ = ingest(std::move(tracker_), w.observations, camera, w.time);
  const TrackingStatus status = tracking_status(tracker_, w.time);

  ControllerInputs raw;
  raw.device_twist = w.sensors.device_twist;
  raw.device_pressed = w.sensors.device_pressed;
  raw.robot_wrench_est = w.sensors.robot_wrench_est;
  raw.tool_axial_force = w.sensors.tool_axial_force;
  raw.tool_axis = w.sensors.tool_axis;
  raw.tool_attached = w.sensors.fsr_attached;
  raw.pin_pulled = w.sensors.pin_pulled;
  raw.marker_seen_now = !w.observations.empty();
  raw.tracking_status = status;
  raw.time = w.time;
  const ControllerInputs inputs = debouncer_.filter(raw);
  const StepResult r = step(mode_, inputs, scenario_.controller);
  mode_ = r.state;

  if (r.command.kind == CommandKind::TrackViewpoint) {
    if (tracker_.published_now && tracker_.published) {
      const SolveResult sol = solve(scenario_.optimizer, w.camera, tracker_.published->tool_in_world);
      if (!sol.rejected) target_ = sol.decision;
    }
  } else {
    target_.reset();
  }

  TickRecord rec;
  rec.tick = w.tick;
  rec.time = w.time;
  rec.mode = mode_.mode;
  rec.signals = r.signals;
  rec.input_error = r.input_error;
  rec.command = r.command;
  rec.tool_true = w.tool_true;
  rec.estimate = tracker_.published;
  rec.published = tracker_.published_now;
  rec.tracking = status;
  rec.camera = w.camera;
  if (rec.estimate) rec.objectives = evaluate_terms(scenario_.optimizer, w.camera, rec.estimate->tool_in_world.position);
  rec.objectives_true = evaluate_terms(scenario_.optimizer, w.camera, w.tool_true.position);
  rec.contact_wrench = w.contact_wrench;
  rec.robot_wrench = w.sensors.robot_wrench_est;
  rec.tool_axial_force = w.sensors.tool_axial_force;
  rec.discrepancy = force_discrepancy(w.sensors.robot_wrench_est, w.sensors.tool_axial_force, w.sensors.tool_axis);
  rec.attached = w.attached;
  rec.pin_pulled = w.pin_pulled;
  for (const auto& o : w.observations) rec.visible.push_back(o.marker_id);
  rec.tip_in_view = point_in_view(camera, tool_tip(w.tool_true, scenario_.contact), scenario_.visibility);
  rec.fittings = static_cast<int>(w.seated_slots.size());
  rec.rolled_distance = w.rolled_distance;

  WorldCommands cmd;
  cmd.robot = r.command;
  if (r.command.kind == CommandKind::TrackViewpoint) cmd.camera_target = target_;
  cmd.interactive_tool = interactive_tool_;
  world_ = step(world_, cmd, scenario_, rng_, injected_);
  injected_.clear();
  return rec;
}

std::vector<TickRecord> run_session(const Scenario& scenario) {
  Session s(scenario);
  std::vector<TickRecord> out;
  out.reserve(static_cast<std::size_t>(scenario.tick_count()));
  while (!s.done()) out.push_back(s.advance());
  return out;
}

}  // namespace vdi
