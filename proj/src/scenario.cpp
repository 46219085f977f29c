#include "vdi/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace vdi {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

Rotation frame_from_axes(const Vec3& x, const Vec3& z) {
  const Vec3 zn = z.normalized();
  const Vec3 xn = (x - x.dot(zn) * zn).normalized();
  Mat3 m;
  m.col(0) = xn;
  m.col(1) = zn.cross(xn);
  m.col(2) = zn;
  return Rotation(m);
}

// Tool held tip-down with the front face (+x) toward the camera (+y).
Rotation front_facing() { return frame_from_axes(Vec3(0, 1, 0), Vec3(0, 0, -1)); }

// Front tilted up so the front face and the leading barrel marker both face the camera.
Rotation angled_front() { return Rotation::rot_x(20.0 * kDeg) * front_facing(); }

// Untagged top face (-z) toward the camera.
Rotation top_face() { return frame_from_axes(Vec3(0, 0, -1), Vec3(0, -1, 0)); }

// Tip pointed at the camera: the end of the tool is in view, the tags are edge-on.
Rotation tip_toward_camera() { return frame_from_axes(Vec3(0, 0, 1), Vec3(0, 1, 0)); }

Keyframe key(double t, const Vec3& p, const Rotation& r) { return Keyframe{t, Pose{p, r}}; }

Event pull_pin(double t) { return Event{t, EventKind::PullPin}; }

Event device(double t, bool pressed, const Vec6& twist = Vec6::Zero()) {
  Event e{t, EventKind::Device};
  e.pressed = pressed;
  e.twist = twist;
  return e;
}

Event hand_pull(double t, double newtons) {
  Event e{t, EventKind::HandPull};
  e.newtons = newtons;
  return e;
}

Vec6 twist(double x, double y, double z) {
  Vec6 v = Vec6::Zero();
  v << x, y, z, 0, 0, 0;
  return v;
}

Scenario base(std::string name, std::string description, double duration, bool attached) {
  Scenario s;
  s.name = std::move(name);
  s.description = std::move(description);
  s.duration = duration;
  s.initially_attached = attached;
  s.layout = default_marker_layout();
  return s;
}

const Vec3 kViewHome(0.0, -0.7, 0.33);

Scenario rolling() {
  Scenario s = base("rolling",
                    "Teleoperated rolling along the table under a light contact force, then the same motion "
                    "by hand in front of the camera.",
                    24.0, true);
  const Vec3 mount(0.0, -0.2, 0.13);
  s.trajectory.keys = {
      key(0.0, mount, front_facing()),
      key(11.0, mount, front_facing()),
      key(11.5, kViewHome, front_facing()),
  };
  for (int i = 0; i < 5; ++i) {
    const double t0 = 12.5 + 2.0 * i;
    const double x = (i % 2 == 0) ? 0.06 : -0.06;
    s.trajectory.keys.push_back(key(t0, kViewHome + Vec3(x, 0.0, -0.01), front_facing()));
  }
  s.trajectory.keys.push_back(key(24.0, kViewHome, front_facing()));
  s.events = {
      device(0.5, true, twist(0.0, 0.0, -0.4)),
      device(2.0, true, twist(0.6, 0.0, -0.4)),
      device(6.0, true, twist(-0.6, 0.0, -0.4)),
      device(10.0, false),
      pull_pin(11.0),
  };
  s.goals.min_rolled_distance = 0.1;
  s.goals.require_modes = {Mode::Teleoperation, Mode::NaturalTracking};
  return s;
}

Scenario press_fit() {
  Scenario s = base("press_fit",
                    "Teleoperated approach until the force limit ends teleoperation, kinesthetic push to seat "
                    "the fitting, then a tracked hand-held inspection pass.",
                    26.0, true);
  s.contact.slots = {Slot{0.0, -0.2, 0.01, 0.005, 4000.0}, Slot{0.05, -0.2, 0.01, 0.005, 4000.0}};
  const Vec3 mount(0.0, -0.2, 0.13);
  s.trajectory.keys = {
      key(0.0, mount, front_facing()),
      key(2.0, mount, front_facing()),
      key(3.0, mount - Vec3(0, 0, 0.006), front_facing()),
      key(6.0, mount - Vec3(0, 0, 0.006), front_facing()),
      key(6.4, kViewHome, front_facing()),
      key(12.0, kViewHome + Vec3(0.05, 0.0, 0.0), front_facing()),
      key(18.0, kViewHome + Vec3(-0.05, 0.0, -0.02), front_facing()),
      key(26.0, kViewHome, front_facing()),
  };
  s.events = {
      device(0.5, true, twist(0.0, 0.0, -1.0)),
      device(1.5, false),
      hand_pull(2.0, 8.0),
      hand_pull(3.5, 0.0),
      pull_pin(6.0),
  };
  s.goals.min_fittings = 1;
  s.goals.require_modes = {Mode::Teleoperation, Mode::Kinesthetic, Mode::NaturalTracking};
  return s;
}

Scenario fig5a_angled() {
  Scenario s = base("fig5a_angled",
                    "Front of the tool, with the most tags, angled toward the camera throughout a slow "
                    "side-to-side task motion.",
                    30.0, false);
  const double xs[] = {0.0, 0.07, 0.0, -0.07, 0.0, 0.07, 0.0, -0.07, 0.0, 0.05, 0.0, -0.05, 0.0};
  for (int i = 0; i < 13; ++i) {
    const double t = 2.5 * i;
    const double wobble = (i % 2 == 0 ? 1.0 : -1.0) * 8.0 * kDeg;
    const Vec3 p = kViewHome + Vec3(xs[i], 0.0, 0.02 * std::sin(0.7 * i));
    s.trajectory.keys.push_back(key(t, p, Rotation::rot_z(wobble) * angled_front()));
  }
  s.goals.require_modes = {Mode::NaturalTracking};
  return s;
}

Scenario fig5b_ee_only() {
  Scenario s = base("fig5b_ee_only",
                    "Tool tip pointed at the camera: the end of the tool stays in view but every tag is "
                    "edge-on, so tracking drops until the tool is turned back.",
                    20.0, false);
  const Vec3 p = kViewHome + Vec3(0.0, -0.05, 0.0);
  s.trajectory.keys = {
      key(0.0, kViewHome, front_facing()),
      key(6.0, kViewHome, front_facing()),
      key(6.5, p, tip_toward_camera()),
      key(14.0, p, tip_toward_camera()),
      key(14.5, kViewHome, front_facing()),
      key(20.0, kViewHome, front_facing()),
  };
  s.marks = {{"ee_only", 6.5}, {"turned_back", 14.5}};
  s.goals.require_modes = {Mode::NaturalTracking, Mode::NaturalLost};
  return s;
}

Scenario fig5c_topface() {
  Scenario s = base("fig5c_topface",
                    "Tracked tool reoriented so its untagged top face points at the camera.", 20.0, false);
  s.trajectory.keys = {
      key(0.0, kViewHome, front_facing()),
      key(6.0, kViewHome, front_facing()),
      key(6.4, kViewHome, top_face()),
      key(20.0, kViewHome, top_face()),
  };
  s.marks = {{"topface", 6.4}};
  s.goals.require_modes = {Mode::NaturalTracking, Mode::NaturalLost};
  return s;
}

Scenario fig5d_present_reorient() {
  Scenario s = base("fig5d_present_reorient",
                    "Operator hears the beep, presents the tool to the camera, then reorients it to continue "
                    "the task and loses tracking again.",
                    30.0, false);
  const Vec3 work = kViewHome + Vec3(0.04, 0.0, -0.02);
  s.trajectory.keys = {
      key(0.0, work, top_face()),
      key(5.0, work, top_face()),
      key(5.5, kViewHome, front_facing()),
      key(10.0, kViewHome, front_facing()),
      key(10.4, work, top_face()),
      key(30.0, work, top_face()),
  };
  s.marks = {{"present", 5.5}, {"reorient", 10.4}};
  s.goals.require_modes = {Mode::NaturalTracking, Mode::NaturalLost};
  return s;
}

}  // namespace

Pose Trajectory::at(double t) const {
  if (keys.empty()) return Pose::identity();
  if (t <= keys.front().t) return keys.front().pose;
  if (t >= keys.back().t) return keys.back().pose;
  const auto hi = std::upper_bound(keys.begin(), keys.end(), t,
                                   [](double v, const Keyframe& k) { return v < k.t; });
  const Keyframe& b = *hi;
  const Keyframe& a = *(hi - 1);
  const double span = b.t - a.t;
  const double s = span > 0.0 ? (t - a.t) / span : 1.0;
  Pose p;
  p.position = (1.0 - s) * a.pose.position + s * b.pose.position;
  p.rotation = Rotation(a.pose.rotation.quaternion().slerp(s, b.pose.rotation.quaternion()));
  return p;
}

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::PullPin: return "pull_pin";
    case EventKind::Reattach: return "reattach";
    case EventKind::Device: return "device";
    case EventKind::HandPull: return "hand_pull";
    case EventKind::ExternalForce: return "external_force";
  }
  return "?";
}

std::optional<EventKind> event_kind_from_string(std::string_view name) {
  for (EventKind k : {EventKind::PullPin, EventKind::Reattach, EventKind::Device, EventKind::HandPull,
                      EventKind::ExternalForce}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

void VisibilityConfig::validate() const {
  if (!(fov_half_angle > 0.0 && fov_half_angle < std::numbers::pi / 2)) {
    throw std::invalid_argument("visibility.fov_half_angle: must lie in (0, pi/2)");
  }
  if (!(min_range >= 0.0 && min_range < max_range)) {
    throw std::invalid_argument("visibility.min_range: must be non-negative and below max_range");
  }
  if (!(max_incidence > 0.0 && max_incidence < std::numbers::pi / 2)) {
    throw std::invalid_argument("visibility.max_incidence: must lie in (0, pi/2)");
  }
  if (!(dropout_prob >= 0.0 && dropout_prob <= 1.0)) {
    throw std::invalid_argument("visibility.dropout_prob: must lie in [0, 1]");
  }
}

void NoiseConfig::validate() const {
  if (!(sigma_pos >= 0.0)) throw std::invalid_argument("noise.sigma_pos: must be non-negative");
  if (!(sigma_rot >= 0.0)) throw std::invalid_argument("noise.sigma_rot: must be non-negative");
  if (fsr_chatter_ticks < 0) throw std::invalid_argument("noise.fsr_chatter_ticks: must be non-negative");
}

void ContactConfig::validate() const {
  if (!std::isfinite(plane_height)) throw std::invalid_argument("contact.plane_height: must be finite");
  if (!(stiffness > 0.0)) throw std::invalid_argument("contact.stiffness: must be positive");
  if (!std::isfinite(tip_offset)) throw std::invalid_argument("contact.tip_offset: must be finite");
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const Slot& s = slots[i];
    const std::string where = "contact.slots[" + std::to_string(i) + "]";
    if (!(s.radius > 0.0)) throw std::invalid_argument(where + ".radius: must be positive");
    if (!(s.depth > 0.0)) throw std::invalid_argument(where + ".depth: must be positive");
    if (!(s.stiffness > 0.0)) throw std::invalid_argument(where + ".stiffness: must be positive");
    if (!std::isfinite(s.x) || !std::isfinite(s.y)) throw std::invalid_argument(where + ": center must be finite");
  }
}

void Scenario::validate() const {
  if (name.empty()) throw std::invalid_argument("name: must not be empty");
  if (!(tick > 0.0)) throw std::invalid_argument("tick: must be positive");
  if (!(duration >= 0.0) || !std::isfinite(duration)) throw std::invalid_argument("duration: must be non-negative");
  if (trajectory.keys.empty()) throw std::invalid_argument("trajectory: at least one keyframe required");
  for (std::size_t i = 0; i < trajectory.keys.size(); ++i) {
    const auto& k = trajectory.keys[i];
    if (!std::isfinite(k.t) || !k.pose.position.allFinite()) {
      throw std::invalid_argument("trajectory[" + std::to_string(i) + "]: non-finite value");
    }
    if (i > 0 && !(k.t > trajectory.keys[i - 1].t)) {
      throw std::invalid_argument("trajectory[" + std::to_string(i) + "].t: keyframe times must increase");
    }
  }
  if (!interactive && (trajectory.start() > 0.0 || trajectory.end() < duration - 1e-9)) {
    throw std::invalid_argument("trajectory: must cover [0, duration]");
  }
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (!std::isfinite(events[i].t) || events[i].t < 0.0) {
      throw std::invalid_argument("events[" + std::to_string(i) + "].t: must be a non-negative time");
    }
    if (i > 0 && events[i].t < events[i - 1].t) {
      throw std::invalid_argument("events[" + std::to_string(i) + "].t: events must be in time order");
    }
  }
  if (goals.min_fittings < 0) throw std::invalid_argument("goals.min_fittings: must be non-negative");
  if (goals.min_fittings > static_cast<int>(contact.slots.size())) {
    throw std::invalid_argument("goals.min_fittings: more fittings than slots");
  }
  layout.validate();
  optimizer.validate();
  controller.validate();
  tracker.validate();
  visibility.validate();
  noise.validate();
  contact.validate();
  if (mount_pose && !mount_pose->position.allFinite()) throw std::invalid_argument("mount: non-finite position");
}

long Scenario::tick_count() const { return static_cast<long>(std::floor(duration / tick + 1e-9)) + 1; }

MarkerLayout default_marker_layout() {
  MarkerLayout layout;
  constexpr double radius = 0.025;
  const double tilt = 20.0 * kDeg;
  for (int i = 0; i < 4; ++i) {
    const double az = 90.0 * kDeg * i;
    const Vec3 radial(std::cos(az), std::sin(az), 0.0);
    const Vec3 normal = std::cos(tilt) * radial + std::sin(tilt) * Vec3::UnitZ();
    MarkerLayoutEntry e;
    e.id = i;
    e.marker_in_tool = Pose{radius * radial + Vec3(0, 0, -0.02), frame_from_axes(Vec3::UnitZ().cross(radial), normal)};
    layout.entries.push_back(e);
  }
  MarkerLayoutEntry front;
  front.id = 4;
  front.marker_in_tool = Pose{Vec3(radius, 0.0, 0.03), frame_from_axes(Vec3::UnitY(), Vec3::UnitX())};
  layout.entries.push_back(front);
  return layout;
}

std::vector<Scenario> builtin_scenarios() {
  return {rolling(), press_fit(), fig5a_angled(), fig5b_ee_only(), fig5c_topface(), fig5d_present_reorient()};
}

std::optional<Scenario> builtin_scenario(std::string_view name) {
  for (auto& s : builtin_scenarios()) {
    if (s.name == name) return s;
  }
  return std::nullopt;
}

}  // namespace vdi
