#pragma once

// Discrete controller input alphabet and an independent transition oracle,
// shared by the unit suite and the acceptance run.

#include <vector>

#include "vdi/mode_controller.hpp"

namespace vdi::table {

inline const Vec3 kAxis(0, 0, -1);

inline ControllerInputs attached_idle(double t = 10.0) {
  ControllerInputs in;
  in.time = t;
  in.tool_axis = kAxis;
  return in;
}

inline Vec6 force(const Vec3& f) {
  Vec6 w = Vec6::Zero();
  w.head<3>() = f;
  return w;
}

// Discrete input alphabet for exhaustive enumeration.
enum class Axial { None, Pull, Push, Weak };

struct Symbol {
  bool pressed, attached, pin, marker, lost, over, elapsed;
  Axial axial;
};

inline std::vector<Symbol> alphabet() {
  std::vector<Symbol> out;
  for (int bits = 0; bits < 128; ++bits) {
    for (Axial a : {Axial::None, Axial::Pull, Axial::Push, Axial::Weak}) {
      out.push_back({(bits & 1) != 0, (bits & 2) != 0, (bits & 4) != 0, (bits & 8) != 0, (bits & 16) != 0,
                     (bits & 32) != 0, (bits & 64) != 0, a});
    }
  }
  return out;
}

inline constexpr double kNow = 10.0;

inline ControllerInputs realize(const Symbol& s) {
  ControllerInputs in = attached_idle(kNow);
  in.device_pressed = s.pressed;
  in.device_twist << 1, 0, 0, 0, 0, 0;
  in.tool_attached = s.attached;
  in.pin_pulled = s.pin;
  in.marker_seen_now = s.marker;
  in.tracking_status = s.lost ? TrackingStatus::Lost : TrackingStatus::Tracking;
  Vec3 f = Vec3::Zero();
  switch (s.axial) {
    case Axial::None: break;
    case Axial::Pull: f = 5.0 * kAxis; break;
    case Axial::Push: f = -5.0 * kAxis; break;
    case Axial::Weak: f = 2.8 * kAxis; break;  // above the discrepancy threshold, below the pull threshold
  }
  if (s.over) f += Vec3(20.0, 0, 0);
  in.robot_wrench_est = force(f);
  return in;
}

inline ModeState realize_state(Mode m, const Symbol& s) {
  ModeState st{m, kNow - 0.1, std::nullopt};
  if (m == Mode::NaturalReady && s.elapsed) st.entered_at = kNow - 1.0;
  if (m == Mode::Kinesthetic && s.elapsed) st.quiet_since = kNow - 1.5;
  return st;
}

// Independent transition table.
struct Expected {
  Mode mode;
  bool error;
};

inline Expected oracle(Mode m, const Symbol& s) {
  if (s.attached && s.pin) return {Mode::Idle, true};
  switch (m) {
    case Mode::NaturalReady:
      if (s.attached) return {Mode::Idle, false};
      if (s.marker) return {Mode::NaturalTracking, false};
      if (s.elapsed) return {Mode::NaturalLost, false};
      return {m, false};
    case Mode::NaturalTracking:
      if (s.attached) return {Mode::Idle, false};
      if (s.lost) return {Mode::NaturalLost, false};
      return {m, false};
    case Mode::NaturalLost:
      if (s.attached) return {Mode::Idle, false};
      if (s.marker) return {Mode::NaturalTracking, false};
      return {m, false};
    default:
      break;
  }
  if (s.pin && !s.attached) return {Mode::NaturalReady, false};
  if (!s.attached) return {Mode::Idle, false};
  switch (m) {
    case Mode::Idle:
      if (s.pressed && !s.over) return {Mode::Teleoperation, false};
      if (s.axial == Axial::Pull) return {Mode::Kinesthetic, false};
      return {Mode::Idle, false};
    case Mode::Teleoperation:
      return {s.over ? Mode::Idle : Mode::Teleoperation, false};
    case Mode::Kinesthetic:
      if (s.axial == Axial::None && s.elapsed) return {Mode::Idle, false};
      return {Mode::Kinesthetic, false};
    default:
      return {m, false};
  }
}

}  // namespace vdi::table
