#include "vdi/scenario_io.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <map>
#include <sstream>

namespace vdi {

namespace {

std::string located(const std::string& source, int line, int column, const std::string& field,
                    const std::string& message) {
  std::ostringstream os;
  os << source;
  if (line > 0) os << ":" << line << ":" << column;
  os << ": ";
  if (!field.empty()) os << field << ": ";
  os << message;
  return os.str();
}

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& n, const std::string& field, const std::string& message) const {
    const YAML::Mark m = n.Mark();
    const bool known = m.line >= 0 && !m.is_null();
    throw ScenarioError(source_, known ? m.line + 1 : 0, known ? m.column + 1 : 0, field, message);
  }

  void remember(const std::string& field, const YAML::Node& n) {
    const YAML::Mark m = n.Mark();
    if (!m.is_null()) marks_[field] = m;
  }

  /// Best source position for a validation message naming `field`.
  std::pair<int, int> position_of(std::string field) const {
    while (!field.empty()) {
      const auto it = marks_.find(field);
      if (it != marks_.end()) return {it->second.line + 1, it->second.column + 1};
      const auto cut = field.find_last_of(".[");
      if (cut == std::string::npos) break;
      field.resize(cut);
    }
    return {0, 0};
  }

  void require_map(const YAML::Node& n, const std::string& field) const {
    if (!n.IsMap()) fail(n, field, "expected a mapping");
  }

  void check_keys(const YAML::Node& n, const std::string& field, std::initializer_list<const char*> allowed) {
    require_map(n, field);
    for (const auto& kv : n) {
      const std::string key = kv.first.as<std::string>();
      if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
        fail(kv.first, join(field, key), "unknown field");
      }
      remember(join(field, key), kv.second);
    }
  }

  static std::string join(const std::string& a, const std::string& b) { return a.empty() ? b : a + "." + b; }

  double number(const YAML::Node& n, const std::string& field) const {
    if (!n.IsScalar()) fail(n, field, "expected a number");
    double v = 0.0;
    try {
      v = n.as<double>();
    } catch (const YAML::Exception&) {
      fail(n, field, "expected a number, got '" + n.Scalar() + "'");
    }
    if (!std::isfinite(v)) fail(n, field, "must be finite");
    return v;
  }

  long integer(const YAML::Node& n, const std::string& field) const {
    if (!n.IsScalar()) fail(n, field, "expected an integer");
    try {
      return n.as<long>();
    } catch (const YAML::Exception&) {
      fail(n, field, "expected an integer, got '" + n.Scalar() + "'");
    }
  }

  bool boolean(const YAML::Node& n, const std::string& field) const {
    if (!n.IsScalar()) fail(n, field, "expected true or false");
    try {
      return n.as<bool>();
    } catch (const YAML::Exception&) {
      fail(n, field, "expected true or false, got '" + n.Scalar() + "'");
    }
  }

  std::string text(const YAML::Node& n, const std::string& field) const {
    if (!n.IsScalar()) fail(n, field, "expected a string");
    return n.Scalar();
  }

  template <int N>
  Eigen::Matrix<double, N, 1> vec(const YAML::Node& n, const std::string& field) const {
    if (!n.IsSequence() || n.size() != static_cast<std::size_t>(N)) {
      fail(n, field, "expected a list of " + std::to_string(N) + " numbers");
    }
    Eigen::Matrix<double, N, 1> v;
    for (int i = 0; i < N; ++i) v[i] = number(n[i], field + "[" + std::to_string(i) + "]");
    return v;
  }

  Pose pose(const YAML::Node& n, const std::string& field, std::initializer_list<const char*> extra = {}) {
    std::vector<const char*> keys{"position", "quaternion", "rpy"};
    keys.insert(keys.end(), extra.begin(), extra.end());
    require_map(n, field);
    for (const auto& kv : n) {
      const std::string key = kv.first.as<std::string>();
      if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return key == a; })) {
        fail(kv.first, join(field, key), "unknown field");
      }
      remember(join(field, key), kv.second);
    }
    Pose p;
    if (!n["position"]) fail(n, join(field, "position"), "required");
    p.position = vec<3>(n["position"], join(field, "position"));
    if (n["quaternion"] && n["rpy"]) fail(n, field, "give either quaternion or rpy, not both");
    if (n["quaternion"]) {
      const Eigen::Vector4d q = vec<4>(n["quaternion"], join(field, "quaternion"));
      if (q.norm() < 1e-9) fail(n["quaternion"], join(field, "quaternion"), "must be non-zero");
      p.rotation = Rotation(Eigen::Quaterniond(q[0], q[1], q[2], q[3]));
    } else if (n["rpy"]) {
      const Vec3 r = vec<3>(n["rpy"], join(field, "rpy"));
      p.rotation = Rotation::from_rpy(r[0], r[1], r[2]);
    }
    return p;
  }

  template <class F>
  void opt(const YAML::Node& parent, const char* key, F&& f) {
    if (const YAML::Node n = parent[key]) f(n);
  }

 private:
  std::string source_;
  std::map<std::string, YAML::Mark> marks_;
};

void read_optimizer(Reader& r, const YAML::Node& n, OptimizerConfig& c) {
  const std::string f = "optimizer";
  r.check_keys(n, f,
               {"w", "d", "p_n", "theta_x_neutral", "theta_y_neutral", "theta_z_fixed", "pos_lo", "pos_hi",
                "theta_x_range", "theta_y_range", "v_lin_max", "v_ang_max", "max_iterations", "step_tolerance"});
  r.opt(n, "w", [&](const YAML::Node& x) {
    const Eigen::Vector4d w = r.vec<4>(x, f + ".w");
    c.w1 = w[0];
    c.w2 = w[1];
    c.w3 = w[2];
    c.w4 = w[3];
  });
  r.opt(n, "d", [&](const YAML::Node& x) { c.d = r.number(x, f + ".d"); });
  r.opt(n, "p_n", [&](const YAML::Node& x) { c.p_n = r.vec<3>(x, f + ".p_n"); });
  r.opt(n, "theta_x_neutral", [&](const YAML::Node& x) { c.theta_x_neutral = r.number(x, f + ".theta_x_neutral"); });
  r.opt(n, "theta_y_neutral", [&](const YAML::Node& x) { c.theta_y_neutral = r.number(x, f + ".theta_y_neutral"); });
  r.opt(n, "theta_z_fixed", [&](const YAML::Node& x) { c.theta_z_fixed = r.number(x, f + ".theta_z_fixed"); });
  r.opt(n, "pos_lo", [&](const YAML::Node& x) { c.pos_lo = r.vec<3>(x, f + ".pos_lo"); });
  r.opt(n, "pos_hi", [&](const YAML::Node& x) { c.pos_hi = r.vec<3>(x, f + ".pos_hi"); });
  r.opt(n, "theta_x_range", [&](const YAML::Node& x) {
    const Eigen::Vector2d v = r.vec<2>(x, f + ".theta_x_range");
    c.theta_x_lo = v[0];
    c.theta_x_hi = v[1];
  });
  r.opt(n, "theta_y_range", [&](const YAML::Node& x) {
    const Eigen::Vector2d v = r.vec<2>(x, f + ".theta_y_range");
    c.theta_y_lo = v[0];
    c.theta_y_hi = v[1];
  });
  r.opt(n, "v_lin_max", [&](const YAML::Node& x) { c.v_lin_max = r.number(x, f + ".v_lin_max"); });
  r.opt(n, "v_ang_max", [&](const YAML::Node& x) { c.v_ang_max = r.number(x, f + ".v_ang_max"); });
  r.opt(n, "max_iterations",
        [&](const YAML::Node& x) { c.max_iterations = static_cast<int>(r.integer(x, f + ".max_iterations")); });
  r.opt(n, "step_tolerance", [&](const YAML::Node& x) { c.step_tolerance = r.number(x, f + ".step_tolerance"); });
}

void read_controller(Reader& r, const YAML::Node& n, ControllerConfig& c) {
  const std::string f = "controller";
  r.check_keys(n, f,
               {"teleop", "pull_threshold", "discrepancy_threshold", "kinesthetic_hold_time", "ready_timeout",
                "debounce_ticks"});
  r.opt(n, "pull_threshold", [&](const YAML::Node& x) { c.pull_threshold = r.number(x, f + ".pull_threshold"); });
  r.opt(n, "discrepancy_threshold",
        [&](const YAML::Node& x) { c.discrepancy_threshold = r.number(x, f + ".discrepancy_threshold"); });
  r.opt(n, "kinesthetic_hold_time",
        [&](const YAML::Node& x) { c.kinesthetic_hold_time = r.number(x, f + ".kinesthetic_hold_time"); });
  r.opt(n, "ready_timeout", [&](const YAML::Node& x) { c.ready_timeout = r.number(x, f + ".ready_timeout"); });
  r.opt(n, "debounce_ticks",
        [&](const YAML::Node& x) { c.debounce_ticks = static_cast<int>(r.integer(x, f + ".debounce_ticks")); });
  r.opt(n, "teleop", [&](const YAML::Node& t) {
    const std::string g = f + ".teleop";
    TeleopConfig& p = c.teleop;
    r.check_keys(t, g,
                 {"lin_gain", "ang_gain", "force_limit", "warn_fraction", "admittance_compliance",
                  "max_linear_speed", "max_angular_speed"});
    r.opt(t, "lin_gain", [&](const YAML::Node& x) { p.lin_gain = r.number(x, g + ".lin_gain"); });
    r.opt(t, "ang_gain", [&](const YAML::Node& x) { p.ang_gain = r.number(x, g + ".ang_gain"); });
    r.opt(t, "force_limit", [&](const YAML::Node& x) { p.force_limit = r.number(x, g + ".force_limit"); });
    r.opt(t, "warn_fraction", [&](const YAML::Node& x) { p.warn_fraction = r.number(x, g + ".warn_fraction"); });
    r.opt(t, "admittance_compliance",
          [&](const YAML::Node& x) { p.admittance_compliance = r.number(x, g + ".admittance_compliance"); });
    r.opt(t, "max_linear_speed",
          [&](const YAML::Node& x) { p.max_linear_speed = r.number(x, g + ".max_linear_speed"); });
    r.opt(t, "max_angular_speed",
          [&](const YAML::Node& x) { p.max_angular_speed = r.number(x, g + ".max_angular_speed"); });
  });
}

void read_tracker(Reader& r, const YAML::Node& n, TrackerConfig& c) {
  const std::string f = "tracker";
  r.check_keys(n, f, {"process_noise", "measurement_noise", "initial_variance", "lost_timeout", "publish_period"});
  r.opt(n, "process_noise", [&](const YAML::Node& x) { c.process_noise = r.vec<6>(x, f + ".process_noise"); });
  r.opt(n, "measurement_noise",
        [&](const YAML::Node& x) { c.measurement_noise = r.vec<6>(x, f + ".measurement_noise"); });
  r.opt(n, "initial_variance",
        [&](const YAML::Node& x) { c.initial_variance = r.vec<6>(x, f + ".initial_variance"); });
  r.opt(n, "lost_timeout", [&](const YAML::Node& x) { c.lost_timeout = r.number(x, f + ".lost_timeout"); });
  r.opt(n, "publish_period", [&](const YAML::Node& x) { c.publish_period = r.number(x, f + ".publish_period"); });
}

void read_visibility(Reader& r, const YAML::Node& n, VisibilityConfig& c) {
  const std::string f = "visibility";
  r.check_keys(n, f, {"fov_half_angle", "min_range", "max_range", "max_incidence", "dropout_prob"});
  r.opt(n, "fov_half_angle", [&](const YAML::Node& x) { c.fov_half_angle = r.number(x, f + ".fov_half_angle"); });
  r.opt(n, "min_range", [&](const YAML::Node& x) { c.min_range = r.number(x, f + ".min_range"); });
  r.opt(n, "max_range", [&](const YAML::Node& x) { c.max_range = r.number(x, f + ".max_range"); });
  r.opt(n, "max_incidence", [&](const YAML::Node& x) { c.max_incidence = r.number(x, f + ".max_incidence"); });
  r.opt(n, "dropout_prob", [&](const YAML::Node& x) { c.dropout_prob = r.number(x, f + ".dropout_prob"); });
}

void read_noise(Reader& r, const YAML::Node& n, NoiseConfig& c) {
  const std::string f = "noise";
  r.check_keys(n, f, {"sigma_pos", "sigma_rot", "fsr_chatter_ticks"});
  r.opt(n, "sigma_pos", [&](const YAML::Node& x) { c.sigma_pos = r.number(x, f + ".sigma_pos"); });
  r.opt(n, "sigma_rot", [&](const YAML::Node& x) { c.sigma_rot = r.number(x, f + ".sigma_rot"); });
  r.opt(n, "fsr_chatter_ticks",
        [&](const YAML::Node& x) { c.fsr_chatter_ticks = static_cast<int>(r.integer(x, f + ".fsr_chatter_ticks")); });
}

void read_contact(Reader& r, const YAML::Node& n, ContactConfig& c) {
  const std::string f = "contact";
  r.check_keys(n, f, {"plane_height", "stiffness", "tip_offset", "slots"});
  r.opt(n, "plane_height", [&](const YAML::Node& x) { c.plane_height = r.number(x, f + ".plane_height"); });
  r.opt(n, "stiffness", [&](const YAML::Node& x) { c.stiffness = r.number(x, f + ".stiffness"); });
  r.opt(n, "tip_offset", [&](const YAML::Node& x) { c.tip_offset = r.number(x, f + ".tip_offset"); });
  r.opt(n, "slots", [&](const YAML::Node& list) {
    if (!list.IsSequence()) r.fail(list, f + ".slots", "expected a list");
    c.slots.clear();
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string g = f + ".slots[" + std::to_string(i) + "]";
      const YAML::Node s = list[i];
      r.check_keys(s, g, {"center", "radius", "depth", "stiffness"});
      Slot slot;
      if (!s["center"]) r.fail(s, g + ".center", "required");
      const Eigen::Vector2d center = r.vec<2>(s["center"], g + ".center");
      slot.x = center[0];
      slot.y = center[1];
      r.opt(s, "radius", [&](const YAML::Node& x) { slot.radius = r.number(x, g + ".radius"); });
      r.opt(s, "depth", [&](const YAML::Node& x) { slot.depth = r.number(x, g + ".depth"); });
      r.opt(s, "stiffness", [&](const YAML::Node& x) { slot.stiffness = r.number(x, g + ".stiffness"); });
      c.slots.push_back(slot);
    }
  });
}

Event read_event(Reader& r, const YAML::Node& n, const std::string& f) {
  r.check_keys(n, f, {"t", "type", "pressed", "twist", "newtons", "force"});
  Event e;
  if (!n["t"]) r.fail(n, f + ".t", "required");
  if (!n["type"]) r.fail(n, f + ".type", "required");
  e.t = r.number(n["t"], f + ".t");
  const std::string type = r.text(n["type"], f + ".type");
  const auto kind = event_kind_from_string(type);
  if (!kind) r.fail(n["type"], f + ".type", "unknown event type '" + type + "'");
  e.kind = *kind;
  auto only_for = [&](const char* key, EventKind k) {
    if (n[key] && e.kind != k) r.fail(n[key], f + "." + key, "not allowed for event type '" + type + "'");
  };
  only_for("pressed", EventKind::Device);
  only_for("twist", EventKind::Device);
  only_for("newtons", EventKind::HandPull);
  only_for("force", EventKind::ExternalForce);
  switch (e.kind) {
    case EventKind::Device:
      if (!n["pressed"]) r.fail(n, f + ".pressed", "required for device events");
      e.pressed = r.boolean(n["pressed"], f + ".pressed");
      r.opt(n, "twist", [&](const YAML::Node& x) { e.twist = r.vec<6>(x, f + ".twist"); });
      break;
    case EventKind::HandPull:
      if (!n["newtons"]) r.fail(n, f + ".newtons", "required for hand_pull events");
      e.newtons = r.number(n["newtons"], f + ".newtons");
      break;
    case EventKind::ExternalForce:
      if (!n["force"]) r.fail(n, f + ".force", "required for external_force events");
      e.force = r.vec<3>(n["force"], f + ".force");
      break;
    default:
      break;
  }
  return e;
}

Scenario read_scenario(Reader& r, const YAML::Node& root) {
  r.check_keys(root, "",
               {"name", "description", "duration", "tick", "seed", "initially_attached", "interactive",
                "trajectory", "mount", "markers", "optimizer", "controller", "tracker", "visibility", "noise",
                "contact", "events", "marks", "goals"});
  Scenario s;
  s.layout = default_marker_layout();
  if (!root["name"]) r.fail(root, "name", "required");
  s.name = r.text(root["name"], "name");
  r.opt(root, "description", [&](const YAML::Node& x) { s.description = r.text(x, "description"); });
  r.opt(root, "duration", [&](const YAML::Node& x) { s.duration = r.number(x, "duration"); });
  r.opt(root, "tick", [&](const YAML::Node& x) { s.tick = r.number(x, "tick"); });
  r.opt(root, "seed", [&](const YAML::Node& x) {
    const long seed = r.integer(x, "seed");
    if (seed < 0) r.fail(x, "seed", "must be non-negative");
    s.seed = static_cast<std::uint64_t>(seed);
  });
  r.opt(root, "initially_attached",
        [&](const YAML::Node& x) { s.initially_attached = r.boolean(x, "initially_attached"); });
  r.opt(root, "interactive", [&](const YAML::Node& x) { s.interactive = r.boolean(x, "interactive"); });

  if (!root["trajectory"]) r.fail(root, "trajectory", "required");
  const YAML::Node traj = root["trajectory"];
  if (!traj.IsSequence()) r.fail(traj, "trajectory", "expected a list of keyframes");
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const std::string f = "trajectory[" + std::to_string(i) + "]";
    r.remember(f, traj[i]);
    if (!traj[i].IsMap() || !traj[i]["t"]) r.fail(traj[i], f + ".t", "required");
    Keyframe k;
    k.t = r.number(traj[i]["t"], f + ".t");
    k.pose = r.pose(traj[i], f, {"t"});
    s.trajectory.keys.push_back(k);
  }

  r.opt(root, "mount", [&](const YAML::Node& x) { s.mount_pose = r.pose(x, "mount"); });
  r.opt(root, "markers", [&](const YAML::Node& list) {
    if (!list.IsSequence()) r.fail(list, "markers", "expected a list");
    s.layout.entries.clear();
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string f = "markers[" + std::to_string(i) + "]";
      r.remember(f, list[i]);
      MarkerLayoutEntry e;
      e.marker_in_tool = r.pose(list[i], f, {"id", "edge_length"});
      if (!list[i]["id"]) r.fail(list[i], f + ".id", "required");
      e.id = static_cast<int>(r.integer(list[i]["id"], f + ".id"));
      r.opt(list[i], "edge_length", [&](const YAML::Node& x) { e.edge_length = r.number(x, f + ".edge_length"); });
      s.layout.entries.push_back(e);
    }
  });
  r.opt(root, "optimizer", [&](const YAML::Node& x) { read_optimizer(r, x, s.optimizer); });
  r.opt(root, "controller", [&](const YAML::Node& x) { read_controller(r, x, s.controller); });
  r.opt(root, "tracker", [&](const YAML::Node& x) { read_tracker(r, x, s.tracker); });
  r.opt(root, "visibility", [&](const YAML::Node& x) { read_visibility(r, x, s.visibility); });
  r.opt(root, "noise", [&](const YAML::Node& x) { read_noise(r, x, s.noise); });
  r.opt(root, "contact", [&](const YAML::Node& x) { read_contact(r, x, s.contact); });
  r.opt(root, "events", [&](const YAML::Node& list) {
    if (!list.IsSequence()) r.fail(list, "events", "expected a list");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string f = "events[" + std::to_string(i) + "]";
      r.remember(f, list[i]);
      s.events.push_back(read_event(r, list[i], f));
    }
  });
  r.opt(root, "marks", [&](const YAML::Node& m) {
    r.require_map(m, "marks");
    for (const auto& kv : m) {
      const std::string key = kv.first.as<std::string>();
      s.marks[key] = r.number(kv.second, "marks." + key);
    }
  });
  r.opt(root, "goals", [&](const YAML::Node& g) {
    r.check_keys(g, "goals", {"min_fittings", "min_rolled_distance", "require_modes"});
    r.opt(g, "min_fittings",
          [&](const YAML::Node& x) { s.goals.min_fittings = static_cast<int>(r.integer(x, "goals.min_fittings")); });
    r.opt(g, "min_rolled_distance",
          [&](const YAML::Node& x) { s.goals.min_rolled_distance = r.number(x, "goals.min_rolled_distance"); });
    r.opt(g, "require_modes", [&](const YAML::Node& list) {
      if (!list.IsSequence()) r.fail(list, "goals.require_modes", "expected a list of mode names");
      for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string f = "goals.require_modes[" + std::to_string(i) + "]";
        const auto mode = mode_from_string(r.text(list[i], f));
        if (!mode) r.fail(list[i], f, "unknown mode '" + list[i].Scalar() + "'");
        s.goals.require_modes.push_back(*mode);
      }
    });
  });
  return s;
}

// Shortest text that reads back to the same double.
std::string num(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  std::string s(buf.data(), res.ptr);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

template <class V>
void emit_vec(YAML::Emitter& out, const V& v) {
  out << YAML::Flow << YAML::BeginSeq;
  for (Eigen::Index i = 0; i < v.size(); ++i) out << num(v[i]);
  out << YAML::EndSeq;
}

void emit_pose_fields(YAML::Emitter& out, const Pose& p) {
  out << YAML::Key << "position" << YAML::Value;
  emit_vec(out, p.position);
  const auto& q = p.rotation.quaternion();
  out << YAML::Key << "quaternion" << YAML::Value;
  emit_vec(out, Eigen::Vector4d(q.w(), q.x(), q.y(), q.z()));
}

void kv(YAML::Emitter& out, const char* key, double v) { out << YAML::Key << key << YAML::Value << num(v); }

}  // namespace

ScenarioError::ScenarioError(std::string source, int line, int column, std::string field, const std::string& message)
    : std::runtime_error(located(source, line, column, field, message)),
      source_(std::move(source)),
      line_(line),
      column_(column),
      field_(std::move(field)) {}

Scenario parse_scenario(const std::string& text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ScenarioError(source, e.mark.line + 1, e.mark.column + 1, "", e.msg);
  }
  if (!root.IsMap()) throw ScenarioError(source, 1, 1, "", "expected a mapping at the top level");

  Reader r(source);
  Scenario s = read_scenario(r, root);
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    const auto colon = msg.find(':');
    std::string field = colon == std::string::npos ? "" : msg.substr(0, colon);
    if (field.rfind("teleop.", 0) == 0) field = "controller." + field;
    if (field == "marker layout") field = "markers";
    const std::string rest = colon == std::string::npos ? msg : msg.substr(colon + 2);
    const auto [line, column] = r.position_of(field);
    throw ScenarioError(source, line, column, field, rest);
  }
  return s;
}

Scenario load_scenario(const std::string& path_or_name) {
  if (!std::filesystem::exists(path_or_name)) {
    if (auto s = builtin_scenario(path_or_name)) return *s;
    throw ScenarioError(path_or_name, 0, 0, "", "no such file or built-in scenario");
  }
  std::ifstream in(path_or_name);
  if (!in) throw ScenarioError(path_or_name, 0, 0, "", "cannot open file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path_or_name);
}

std::string dump_scenario(const Scenario& s) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << s.name;
  if (!s.description.empty()) out << YAML::Key << "description" << YAML::Value << s.description;
  kv(out, "duration", s.duration);
  kv(out, "tick", s.tick);
  out << YAML::Key << "seed" << YAML::Value << s.seed;
  out << YAML::Key << "initially_attached" << YAML::Value << s.initially_attached;
  if (s.interactive) out << YAML::Key << "interactive" << YAML::Value << true;

  out << YAML::Key << "trajectory" << YAML::Value << YAML::BeginSeq;
  for (const auto& k : s.trajectory.keys) {
    out << YAML::BeginMap;
    kv(out, "t", k.t);
    emit_pose_fields(out, k.pose);
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  if (s.mount_pose) {
    out << YAML::Key << "mount" << YAML::Value << YAML::BeginMap;
    emit_pose_fields(out, *s.mount_pose);
    out << YAML::EndMap;
  }

  out << YAML::Key << "events" << YAML::Value;
  if (s.events.empty()) out << YAML::Flow;
  out << YAML::BeginSeq;
  for (const auto& e : s.events) {
    out << YAML::Flow << YAML::BeginMap;
    kv(out, "t", e.t);
    out << YAML::Key << "type" << YAML::Value << std::string(to_string(e.kind));
    if (e.kind == EventKind::Device) {
      out << YAML::Key << "pressed" << YAML::Value << e.pressed;
      out << YAML::Key << "twist" << YAML::Value;
      emit_vec(out, e.twist);
    } else if (e.kind == EventKind::HandPull) {
      kv(out, "newtons", e.newtons);
    } else if (e.kind == EventKind::ExternalForce) {
      out << YAML::Key << "force" << YAML::Value;
      emit_vec(out, e.force);
    }
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;

  if (!s.marks.empty()) {
    out << YAML::Key << "marks" << YAML::Value << YAML::BeginMap;
    for (const auto& [k, v] : s.marks) kv(out, k.c_str(), v);
    out << YAML::EndMap;
  }
  out << YAML::Key << "goals" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "min_fittings" << YAML::Value << s.goals.min_fittings;
  kv(out, "min_rolled_distance", s.goals.min_rolled_distance);
  out << YAML::Key << "require_modes" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (Mode m : s.goals.require_modes) out << std::string(to_string(m));
  out << YAML::EndSeq << YAML::EndMap;

  const OptimizerConfig& o = s.optimizer;
  out << YAML::Key << "optimizer" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "w" << YAML::Value;
  emit_vec(out, Eigen::Vector4d(o.w1, o.w2, o.w3, o.w4));
  kv(out, "d", o.d);
  out << YAML::Key << "p_n" << YAML::Value;
  emit_vec(out, o.p_n);
  kv(out, "theta_x_neutral", o.theta_x_neutral);
  kv(out, "theta_y_neutral", o.theta_y_neutral);
  kv(out, "theta_z_fixed", o.theta_z_fixed);
  out << YAML::Key << "pos_lo" << YAML::Value;
  emit_vec(out, o.pos_lo);
  out << YAML::Key << "pos_hi" << YAML::Value;
  emit_vec(out, o.pos_hi);
  out << YAML::Key << "theta_x_range" << YAML::Value;
  emit_vec(out, Eigen::Vector2d(o.theta_x_lo, o.theta_x_hi));
  out << YAML::Key << "theta_y_range" << YAML::Value;
  emit_vec(out, Eigen::Vector2d(o.theta_y_lo, o.theta_y_hi));
  kv(out, "v_lin_max", o.v_lin_max);
  kv(out, "v_ang_max", o.v_ang_max);
  out << YAML::Key << "max_iterations" << YAML::Value << o.max_iterations;
  kv(out, "step_tolerance", o.step_tolerance);
  out << YAML::EndMap;

  const ControllerConfig& c = s.controller;
  out << YAML::Key << "controller" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "teleop" << YAML::Value << YAML::BeginMap;
  kv(out, "lin_gain", c.teleop.lin_gain);
  kv(out, "ang_gain", c.teleop.ang_gain);
  kv(out, "force_limit", c.teleop.force_limit);
  kv(out, "warn_fraction", c.teleop.warn_fraction);
  kv(out, "admittance_compliance", c.teleop.admittance_compliance);
  kv(out, "max_linear_speed", c.teleop.max_linear_speed);
  kv(out, "max_angular_speed", c.teleop.max_angular_speed);
  out << YAML::EndMap;
  kv(out, "pull_threshold", c.pull_threshold);
  kv(out, "discrepancy_threshold", c.discrepancy_threshold);
  kv(out, "kinesthetic_hold_time", c.kinesthetic_hold_time);
  kv(out, "ready_timeout", c.ready_timeout);
  out << YAML::Key << "debounce_ticks" << YAML::Value << c.debounce_ticks;
  out << YAML::EndMap;

  const TrackerConfig& t = s.tracker;
  out << YAML::Key << "tracker" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "process_noise" << YAML::Value;
  emit_vec(out, t.process_noise);
  out << YAML::Key << "measurement_noise" << YAML::Value;
  emit_vec(out, t.measurement_noise);
  out << YAML::Key << "initial_variance" << YAML::Value;
  emit_vec(out, t.initial_variance);
  kv(out, "lost_timeout", t.lost_timeout);
  kv(out, "publish_period", t.publish_period);
  out << YAML::EndMap;

  const VisibilityConfig& v = s.visibility;
  out << YAML::Key << "visibility" << YAML::Value << YAML::BeginMap;
  kv(out, "fov_half_angle", v.fov_half_angle);
  kv(out, "min_range", v.min_range);
  kv(out, "max_range", v.max_range);
  kv(out, "max_incidence", v.max_incidence);
  kv(out, "dropout_prob", v.dropout_prob);
  out << YAML::EndMap;

  out << YAML::Key << "noise" << YAML::Value << YAML::BeginMap;
  kv(out, "sigma_pos", s.noise.sigma_pos);
  kv(out, "sigma_rot", s.noise.sigma_rot);
  out << YAML::Key << "fsr_chatter_ticks" << YAML::Value << s.noise.fsr_chatter_ticks;
  out << YAML::EndMap;

  out << YAML::Key << "contact" << YAML::Value << YAML::BeginMap;
  kv(out, "plane_height", s.contact.plane_height);
  kv(out, "stiffness", s.contact.stiffness);
  kv(out, "tip_offset", s.contact.tip_offset);
  out << YAML::Key << "slots" << YAML::Value;
  if (s.contact.slots.empty()) out << YAML::Flow;
  out << YAML::BeginSeq;
  for (const Slot& sl : s.contact.slots) {
    out << YAML::Flow << YAML::BeginMap;
    out << YAML::Key << "center" << YAML::Value;
    emit_vec(out, Eigen::Vector2d(sl.x, sl.y));
    kv(out, "radius", sl.radius);
    kv(out, "depth", sl.depth);
    kv(out, "stiffness", sl.stiffness);
    out << YAML::EndMap;
  }
  out << YAML::EndSeq << YAML::EndMap;

  out << YAML::Key << "markers" << YAML::Value << YAML::BeginSeq;
  for (const auto& e : s.layout.entries) {
    out << YAML::BeginMap;
    out << YAML::Key << "id" << YAML::Value << e.id;
    emit_pose_fields(out, e.marker_in_tool);
    kv(out, "edge_length", e.edge_length);
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;

  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

Scenario with_setting(const Scenario& scenario, const std::string& path, const std::string& value) {
  YAML::Node root = YAML::Load(dump_scenario(scenario));
  YAML::Node parsed;
  try {
    parsed = YAML::Load(value);
  } catch (const YAML::ParserException& e) {
    throw ScenarioError("set_config", 0, 0, path, "value is not valid YAML: " + e.msg);
  }
  std::vector<std::string> parts;
  std::stringstream ss(path);
  for (std::string p; std::getline(ss, p, '.');) {
    if (p.empty()) throw ScenarioError("set_config", 0, 0, path, "empty path segment");
    parts.push_back(p);
  }
  if (parts.empty()) throw ScenarioError("set_config", 0, 0, path, "empty path");

  // yaml-cpp nodes are handles; walk by reassigning references into the tree.
  std::vector<YAML::Node> chain{root};
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    YAML::Node next = chain.back()[parts[i]];
    if (!next.IsMap()) throw ScenarioError("set_config", 0, 0, path, "no such section '" + parts[i] + "'");
    chain.push_back(next);
  }
  if (!chain.back()[parts.back()]) throw ScenarioError("set_config", 0, 0, path, "unknown field");
  chain.back()[parts.back()] = parsed;

  YAML::Emitter out;
  out << root;
  return parse_scenario(out.c_str(), "set_config");
}

}  // namespace vdi
