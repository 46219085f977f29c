#include "vdi/sim_world.hpp"

#include <algorithm>
#include <cmath>

namespace vdi {

namespace {

constexpr double kTimeEpsilon = 1e-9;

Vec3 gaussian3(Rng& rng, double sigma) {
  std::normal_distribution<double> n(0.0, 1.0);
  const double a = n(rng);
  const double b = n(rng);
  const double c = n(rng);
  return sigma * Vec3(a, b, c);
}

void evaluate_tick(WorldState& w, const Scenario& sc, Rng& rng, const std::optional<Vec3>& previous_tip,
                   bool attachment_changed) {
  w.contact_wrench = contact_force(w.tool_true, sc.contact);

  const Vec3 tip = tool_tip(w.tool_true, sc.contact);
  for (std::size_t i = 0; i < sc.contact.slots.size(); ++i) {
    const auto depth = slot_depth(tip, sc.contact, i);
    const int id = static_cast<int>(i);
    if (depth && *depth >= sc.contact.slots[i].depth - 1e-6 &&
        std::find(w.seated_slots.begin(), w.seated_slots.end(), id) == w.seated_slots.end()) {
      w.seated_slots.push_back(id);
    }
  }
  if (previous_tip && w.contact_wrench[2] > 0.0 && tip.z() <= sc.contact.plane_height &&
      previous_tip->z() <= sc.contact.plane_height) {
    w.rolled_distance += (tip - *previous_tip).head<2>().norm();
  }

  SensorReadings& s = w.sensors;
  if (w.fsr_chatter_left > 0 && !attachment_changed) {  // chatter follows the change
    std::bernoulli_distribution coin(0.5);
    s.fsr_attached = coin(rng);
    --w.fsr_chatter_left;
  } else {
    s.fsr_attached = w.attached;
  }
  s.pin_pulled = w.pin_pulled;
  s.tool_axis = w.tool_true.rotation * Vec3::UnitZ();
  const Vec3 f_env = w.contact_wrench.head<3>();
  s.tool_axial_force = f_env.dot(s.tool_axis);
  s.robot_wrench_est.setZero();
  s.robot_wrench_est.head<3>() = w.external_force;
  if (w.attached) {
    s.robot_wrench_est += w.contact_wrench;
    s.robot_wrench_est.head<3>() += w.hand_pull * s.tool_axis;
  }
  s.device_pressed = w.device_pressed;
  s.device_twist = w.device_twist;

  w.observations.clear();
  if (!w.attached) {
    w.observations = visible_markers(camera_pose(sc.optimizer, w.camera), w.tool_true, sc.layout, sc.visibility,
                                     sc.noise, w.time, rng);
  }
}

void apply_due_events(WorldState& w, const Scenario& sc, const std::vector<Event>& injected) {
  while (w.next_event < sc.events.size() && sc.events[w.next_event].t <= w.time + kTimeEpsilon) {
    apply_event(w, sc.events[w.next_event]);
    ++w.next_event;
  }
  for (const Event& e : injected) apply_event(w, e);
}

}  // namespace

std::vector<MarkerGeometry> marker_geometry(const Pose& camera, const Pose& tool, const MarkerLayout& layout,
                                            const VisibilityConfig& vis) {
  std::vector<MarkerGeometry> out;
  out.reserve(layout.entries.size());
  const Pose world_to_camera = invert(camera);
  for (const auto& entry : layout.entries) {
    const Pose marker = tool * entry.marker_in_tool;
    const Vec3 rel = world_to_camera.apply(marker.position);
    const double range = rel.norm();
    MarkerGeometry g;
    g.id = entry.id;
    g.in_fov = rel.z() > 0.0 && std::atan2(rel.head<2>().norm(), rel.z()) <= vis.fov_half_angle;
    g.in_range = range >= vis.min_range && range <= vis.max_range;
    const Vec3 to_camera = camera.position - marker.position;
    const Vec3 normal = marker.rotation * Vec3::UnitZ();
    const double n = to_camera.norm();
    g.incidence = n > 0.0 ? std::acos(std::clamp(normal.dot(to_camera) / n, -1.0, 1.0)) : M_PI;
    g.geometric = g.in_fov && g.in_range && g.incidence <= vis.max_incidence;
    out.push_back(g);
  }
  return out;
}

bool point_in_view(const Pose& camera, const Vec3& point, const VisibilityConfig& vis) {
  const Vec3 rel = invert(camera).apply(point);
  const double range = rel.norm();
  return rel.z() > 0.0 && std::atan2(rel.head<2>().norm(), rel.z()) <= vis.fov_half_angle &&
         range >= vis.min_range && range <= vis.max_range;
}

std::vector<MarkerObservation> visible_markers(const Pose& camera, const Pose& tool, const MarkerLayout& layout,
                                               const VisibilityConfig& vis, const NoiseConfig& noise,
                                               double timestamp, Rng& rng) {
  const auto geometry = marker_geometry(camera, tool, layout, vis);
  const Pose world_to_camera = invert(camera);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<MarkerObservation> out;
  for (std::size_t i = 0; i < layout.entries.size(); ++i) {
    const double u = uniform(rng);
    const Vec3 dp = gaussian3(rng, noise.sigma_pos);
    const Vec3 dr = gaussian3(rng, noise.sigma_rot);
    if (!geometry[i].geometric || u < vis.dropout_prob) continue;

    Pose m = world_to_camera * tool * layout.entries[i].marker_in_tool;
    m.position += dp;
    m.rotation = Rotation::exp(dr) * m.rotation;
    out.push_back(MarkerObservation{layout.entries[i].id, m, timestamp});
  }
  return out;
}

Vec3 tool_tip(const Pose& tool, const ContactConfig& contact) {
  return tool.apply(Vec3(0.0, 0.0, contact.tip_offset));
}

std::optional<double> slot_depth(const Vec3& tip, const ContactConfig& contact, std::size_t i) {
  const Slot& s = contact.slots[i];
  if (std::hypot(tip.x() - s.x, tip.y() - s.y) > s.radius) return std::nullopt;
  return contact.plane_height - tip.z();
}

Vec6 contact_force(const Pose& tool, const ContactConfig& contact) {
  Vec6 wrench = Vec6::Zero();
  const Vec3 tip = tool_tip(tool, contact);
  const double depth = contact.plane_height - tip.z();
  if (depth <= 0.0) return wrench;

  double f = contact.stiffness * depth;
  for (std::size_t i = 0; i < contact.slots.size(); ++i) {
    if (slot_depth(tip, contact, i)) {
      const Slot& s = contact.slots[i];
      f = s.stiffness * std::min(depth, s.depth) + contact.stiffness * std::max(0.0, depth - s.depth);
      break;
    }
  }
  const Vec3 force(0.0, 0.0, f);
  wrench.head<3>() = force;
  wrench.tail<3>() = (tip - tool.position).cross(force);
  return wrench;
}

void apply_event(WorldState& w, const Event& e) {
  switch (e.kind) {
    case EventKind::PullPin:
      w.pin_pulled = true;
      w.attached = false;
      w.hand_pull = 0.0;
      break;
    case EventKind::Reattach:
      w.pin_pulled = false;
      w.attached = true;
      w.hand_pull = 0.0;
      break;
    case EventKind::Device:
      w.device_pressed = e.pressed;
      w.device_twist = e.pressed ? e.twist : Vec6::Zero();
      break;
    case EventKind::HandPull:
      w.hand_pull = e.newtons;
      break;
    case EventKind::ExternalForce:
      w.external_force = e.force;
      break;
  }
}

WorldState initial_world(const Scenario& sc, Rng& rng) {
  WorldState w;
  w.camera = CameraDecision::neutral(sc.optimizer);
  w.attached = sc.initially_attached;
  w.pin_pulled = !sc.initially_attached;
  w.mount = sc.mount_pose.value_or(sc.trajectory.at(0.0));
  apply_due_events(w, sc, {});
  w.tool_true = w.attached ? w.mount : sc.trajectory.at(0.0);
  evaluate_tick(w, sc, rng, std::nullopt, false);
  return w;
}

WorldState step(const WorldState& world, const WorldCommands& cmd, const Scenario& sc, Rng& rng,
                const std::vector<Event>& injected) {
  WorldState w = world;
  if (w.ended) return w;
  const long next = w.tick + 1;
  const double t = static_cast<double>(next) * sc.tick;
  if (!sc.interactive && t > sc.duration + kTimeEpsilon) {
    w.ended = true;
    return w;
  }
  const double dt = t - w.time;
  const Vec3 previous_tip = tool_tip(w.tool_true, sc.contact);
  w.tick = next;
  w.time = t;

  const bool was_attached = w.attached;
  apply_due_events(w, sc, injected);
  if (w.attached != was_attached) w.fsr_chatter_left = sc.noise.fsr_chatter_ticks;

  if (w.attached) {
    if (cmd.robot.kind == CommandKind::Twist && was_attached) {
      w.mount.position += cmd.robot.twist.head<3>() * dt;
      w.mount.rotation = Rotation::exp(cmd.robot.twist.tail<3>() * dt) * w.mount.rotation;
    }
    if (cmd.robot.kind == CommandKind::FollowHand && was_attached) {
      if (!w.follow_offset) w.follow_offset = invert(sc.trajectory.at(world.time)) * w.mount;
      w.mount = sc.trajectory.at(t) * *w.follow_offset;
    } else {
      w.follow_offset.reset();
    }
    w.tool_true = w.mount;
  } else {
    w.follow_offset.reset();
    w.tool_true = cmd.interactive_tool.value_or(sc.trajectory.at(t));
  }

  if (cmd.camera_target) w.camera = limit_velocity(w.camera, *cmd.camera_target, dt, sc.optimizer);

  evaluate_tick(w, sc, rng, previous_tip, w.attached != was_attached);
  return w;
}

}  // namespace vdi
