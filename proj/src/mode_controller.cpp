#include "vdi/mode_controller.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace vdi {

namespace {

constexpr std::array<std::string_view, 6> kModeNames = {
    "Idle", "Teleoperation", "Kinesthetic", "NaturalReady", "NaturalTracking", "NaturalLost"};

ModeState enter(Mode mode, double time) { return ModeState{mode, time, std::nullopt}; }

Vec3 clamp_norm(const Vec3& v, double max_norm) {
  const double n = v.norm();
  return n > max_norm ? Vec3(v * (max_norm / n)) : v;
}

RobotCommand command_for(Mode mode, const ControllerInputs& inputs, const ControllerConfig& config) {
  switch (mode) {
    case Mode::Idle:
      return {CommandKind::Hold, Vec6::Zero()};
    case Mode::Teleoperation:
      return {CommandKind::Twist, admittance_command(inputs, config.teleop)};
    case Mode::Kinesthetic:
      return {CommandKind::FollowHand, Vec6::Zero()};
    case Mode::NaturalReady:
    case Mode::NaturalTracking:
    case Mode::NaturalLost:
      return {CommandKind::TrackViewpoint, Vec6::Zero()};
  }
  return {};
}

ModeState transition(const ModeState& s, const ControllerInputs& in, const ControllerConfig& cfg) {
  const double t = in.time;

  if (is_natural(s.mode)) {
    if (in.tool_attached) return enter(Mode::Idle, t);
    switch (s.mode) {
      case Mode::NaturalReady:
        if (in.marker_seen_now) return enter(Mode::NaturalTracking, t);
        if (t - s.entered_at > cfg.ready_timeout) return enter(Mode::NaturalLost, t);
        return s;
      case Mode::NaturalTracking:
        if (in.tracking_status == TrackingStatus::Lost) return enter(Mode::NaturalLost, t);
        return s;
      case Mode::NaturalLost:
        if (in.marker_seen_now) return enter(Mode::NaturalTracking, t);
        return s;
      default:
        return s;
    }
  }

  if (in.pin_pulled && !in.tool_attached) return enter(Mode::NaturalReady, t);
  if (!in.tool_attached) return s.mode == Mode::Idle ? s : enter(Mode::Idle, t);

  const double contact = contact_force_magnitude(in);
  const double discrepancy = force_discrepancy(in.robot_wrench_est, in.tool_axial_force, in.tool_axis);
  const double pull = axial_pull(in.robot_wrench_est, in.tool_axial_force, in.tool_axis);

  switch (s.mode) {
    case Mode::Idle:
      if (in.device_pressed && contact <= cfg.teleop.force_limit) return enter(Mode::Teleoperation, t);
      if (discrepancy > cfg.discrepancy_threshold && pull > cfg.pull_threshold) {
        return enter(Mode::Kinesthetic, t);
      }
      return s;
    case Mode::Teleoperation:
      if (contact > cfg.teleop.force_limit) return enter(Mode::Idle, t);
      return s;
    case Mode::Kinesthetic: {
      if (discrepancy > cfg.discrepancy_threshold) return ModeState{s.mode, s.entered_at, std::nullopt};
      const double since = s.quiet_since.value_or(t);
      if (t - since >= cfg.kinesthetic_hold_time) return enter(Mode::Idle, t);
      return ModeState{s.mode, s.entered_at, since};
    }
    default:
      return s;
  }
}

}  // namespace

std::string_view to_string(Mode mode) { return kModeNames[static_cast<std::size_t>(mode)]; }

std::optional<Mode> mode_from_string(std::string_view name) {
  for (Mode m : kAllModes) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

bool is_natural(Mode mode) {
  return mode == Mode::NaturalReady || mode == Mode::NaturalTracking || mode == Mode::NaturalLost;
}

std::string_view to_string(LedPattern pattern) {
  switch (pattern) {
    case LedPattern::Off: return "Off";
    case LedPattern::Solid: return "Solid";
    case LedPattern::FlashBlue: return "FlashBlue";
    case LedPattern::ForceGradient: return "ForceGradient";
  }
  return "?";
}

std::string_view to_string(LedColor color) {
  switch (color) {
    case LedColor::None: return "none";
    case LedColor::White: return "white";
    case LedColor::Green: return "green";
    case LedColor::Blue: return "blue";
    case LedColor::Red: return "red";
    case LedColor::Amber: return "amber";
  }
  return "?";
}

std::string_view to_string(CommandKind kind) {
  switch (kind) {
    case CommandKind::Hold: return "hold";
    case CommandKind::Twist: return "twist";
    case CommandKind::FollowHand: return "follow_hand";
    case CommandKind::TrackViewpoint: return "track_viewpoint";
  }
  return "?";
}

void TeleopConfig::validate() const {
  if (!(force_limit > 0.0)) throw std::invalid_argument("teleop.force_limit: must be positive");
  if (!(warn_fraction > 0.0 && warn_fraction < 1.0)) {
    throw std::invalid_argument("teleop.warn_fraction: must lie in (0, 1)");
  }
  if (!(lin_gain >= 0.0)) throw std::invalid_argument("teleop.lin_gain: must be non-negative");
  if (!(ang_gain >= 0.0)) throw std::invalid_argument("teleop.ang_gain: must be non-negative");
  if (!(admittance_compliance >= 0.0)) {
    throw std::invalid_argument("teleop.admittance_compliance: must be non-negative");
  }
  if (!(max_linear_speed > 0.0)) throw std::invalid_argument("teleop.max_linear_speed: must be positive");
  if (!(max_angular_speed > 0.0)) throw std::invalid_argument("teleop.max_angular_speed: must be positive");
}

void ControllerConfig::validate() const {
  teleop.validate();
  if (!(pull_threshold >= 0.0)) throw std::invalid_argument("controller.pull_threshold: must be non-negative");
  if (!(discrepancy_threshold >= 0.0)) {
    throw std::invalid_argument("controller.discrepancy_threshold: must be non-negative");
  }
  if (!(kinesthetic_hold_time >= 0.0)) {
    throw std::invalid_argument("controller.kinesthetic_hold_time: must be non-negative");
  }
  if (!(ready_timeout > 0.0)) throw std::invalid_argument("controller.ready_timeout: must be positive");
  if (debounce_ticks < 1) throw std::invalid_argument("controller.debounce_ticks: must be at least 1");
}

double contact_force_magnitude(const ControllerInputs& inputs) {
  return inputs.robot_wrench_est.head<3>().norm();
}

double axial_pull(const Vec6& robot_wrench_est, double tool_axial_force, const Vec3& tool_axis_in_world) {
  return robot_wrench_est.head<3>().dot(tool_axis_in_world) - tool_axial_force;
}

double force_discrepancy(const Vec6& robot_wrench_est, double tool_axial_force, const Vec3& tool_axis_in_world) {
  return std::abs(axial_pull(robot_wrench_est, tool_axial_force, tool_axis_in_world));
}

double force_feedback_level(double contact_force, const TeleopConfig& config) {
  return std::clamp(std::abs(contact_force) / config.force_limit, 0.0, 1.0);
}

Vec6 admittance_command(const ControllerInputs& inputs, const TeleopConfig& config) {
  Vec6 out = Vec6::Zero();
  if (!inputs.device_pressed) return out;

  Vec3 v = config.lin_gain * inputs.device_twist.head<3>();
  const Vec3 w = config.ang_gain * inputs.device_twist.tail<3>();

  const Vec3 f = inputs.robot_wrench_est.head<3>();
  const double f_norm = f.norm();
  if (f_norm > 0.0) {
    const Vec3 into = -f / f_norm;  // direction that pushes further into the contact
    const double v_into = v.dot(into);
    if (v_into > 0.0) {
      const double reduced = f_norm >= config.force_limit
                                 ? 0.0
                                 : std::max(0.0, v_into - config.admittance_compliance * f_norm);
      v += (reduced - v_into) * into;
    }
  }
  out.head<3>() = clamp_norm(v, config.max_linear_speed);
  out.tail<3>() = clamp_norm(w, config.max_angular_speed);
  return out;
}

Signals signals_for(Mode mode, const ControllerInputs& inputs, const ControllerConfig& config) {
  Signals s;
  switch (mode) {
    case Mode::Idle:
      s.led = {LedPattern::Solid, LedColor::White, 0.0};
      break;
    case Mode::Teleoperation: {
      const double level = force_feedback_level(contact_force_magnitude(inputs), config.teleop);
      s.led = {LedPattern::ForceGradient, LedColor::Amber, level};
      s.warning_tone = level > config.teleop.warn_fraction;
      break;
    }
    case Mode::Kinesthetic:
      s.led = {LedPattern::Solid, LedColor::Green, 0.0};
      break;
    case Mode::NaturalReady:
      s.led = {LedPattern::FlashBlue, LedColor::Blue, 0.0};
      break;
    case Mode::NaturalTracking:
      s.led = {LedPattern::Solid, LedColor::Blue, 0.0};
      break;
    case Mode::NaturalLost:
      s.led = {LedPattern::Solid, LedColor::Red, 0.0};
      s.beep = true;
      break;
  }
  return s;
}

StepResult step(const ModeState& state, const ControllerInputs& inputs, const ControllerConfig& config) {
  StepResult r;
  const bool finite = std::isfinite(inputs.tool_axial_force) && inputs.robot_wrench_est.allFinite() &&
                      inputs.device_twist.allFinite() && inputs.tool_axis.allFinite();
  if ((inputs.tool_attached && inputs.pin_pulled) || !finite) {
    r.input_error = true;
    r.state = state.mode == Mode::Idle ? ModeState{Mode::Idle, state.entered_at, std::nullopt}
                                       : enter(Mode::Idle, inputs.time);
  } else {
    r.state = transition(state, inputs, config);
  }
  r.signals = signals_for(r.state.mode, inputs, config);
  r.command = command_for(r.state.mode, inputs, config);
  return r;
}

bool InputDebouncer::Channel::update(bool raw, int ticks) {
  if (!initialized) {
    initialized = true;
    value = raw;
    hold = 0;
    return value;
  }
  if (hold > 0) {
    --hold;
    return value;
  }
  if (raw != value) {
    value = raw;
    hold = ticks - 1;
  }
  return value;
}

ControllerInputs InputDebouncer::filter(const ControllerInputs& raw) {
  ControllerInputs out = raw;
  out.device_pressed = pressed_.update(raw.device_pressed, ticks_);
  out.tool_attached = attached_.update(raw.tool_attached, ticks_);
  out.pin_pulled = pin_.update(raw.pin_pulled, ticks_);
  return out;
}

}  // namespace vdi
