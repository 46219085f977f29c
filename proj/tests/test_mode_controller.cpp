#include <doctest.h>

#include <random>
#include <set>
#include <vector>

#include "transition_table.hpp"
#include "vdi/mode_controller.hpp"

using namespace vdi;
using namespace vdi::table;

TEST_CASE("mode_controller: defaults and validation") {
  ControllerConfig c;
  CHECK(c.teleop.force_limit == 15.0);
  CHECK(c.teleop.warn_fraction == 0.8);
  CHECK(c.pull_threshold == 3.0);
  CHECK(c.discrepancy_threshold == 2.5);
  CHECK(c.kinesthetic_hold_time == 1.0);
  CHECK(c.teleop.lin_gain == 0.05);
  CHECK(c.teleop.ang_gain == 0.3);
  CHECK(c.debounce_ticks == 3);
  CHECK_NOTHROW(c.validate());

  ControllerConfig bad = c;
  bad.teleop.force_limit = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = c;
  bad.teleop.warn_fraction = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = c;
  bad.teleop.warn_fraction = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("mode_controller: mode names round trip") {
  for (Mode m : kAllModes) CHECK(mode_from_string(to_string(m)) == m);
  CHECK_FALSE(mode_from_string("Bogus").has_value());
}

TEST_CASE("mode_controller: step examples") {
  const ControllerConfig cfg;

  SUBCASE("pressing the device while attached enters teleoperation") {
    ControllerInputs in = attached_idle();
    in.device_pressed = true;
    const auto r = step(ModeState{}, in, cfg);
    CHECK(r.state.mode == Mode::Teleoperation);
    CHECK(r.command.kind == CommandKind::Twist);
  }
  SUBCASE("first marker sighting starts tracking") {
    ControllerInputs in = attached_idle();
    in.tool_attached = false;
    in.pin_pulled = true;
    in.marker_seen_now = true;
    const auto r = step(ModeState{Mode::NaturalReady, kNow - 0.1, {}}, in, cfg);
    CHECK(r.state.mode == Mode::NaturalTracking);
    CHECK(r.command.kind == CommandKind::TrackViewpoint);
  }
  SUBCASE("contact force above the limit leaves teleoperation") {
    ControllerInputs in = attached_idle();
    in.device_pressed = true;
    in.robot_wrench_est = force(Vec3(0, 0, 15.5));
    const auto r = step(ModeState{Mode::Teleoperation, 0.0, {}}, in, cfg);
    CHECK(r.state.mode == Mode::Idle);
    CHECK(r.command.kind == CommandKind::Hold);
  }
  SUBCASE("contact force exactly at the limit keeps teleoperation") {
    ControllerInputs in = attached_idle();
    in.device_pressed = true;
    in.robot_wrench_est = force(Vec3(0, 0, 15.0));
    CHECK(step(ModeState{Mode::Teleoperation, 0.0, {}}, in, cfg).state.mode == Mode::Teleoperation);
  }
  SUBCASE("operator pull on a free end effector enters kinesthetic") {
    ControllerInputs in = attached_idle();
    in.robot_wrench_est = force(8.0 * kAxis);
    in.tool_axial_force = 0.0;
    const auto r = step(ModeState{}, in, cfg);
    CHECK(r.state.mode == Mode::Kinesthetic);
    CHECK(r.command.kind == CommandKind::FollowHand);
  }
  SUBCASE("pushing against the tool axis does not enter kinesthetic") {
    ControllerInputs in = attached_idle();
    in.robot_wrench_est = force(-8.0 * kAxis);
    CHECK(step(ModeState{}, in, cfg).state.mode == Mode::Idle);
  }
  SUBCASE("environment load seen by both sensors does not enter kinesthetic") {
    ControllerInputs in = attached_idle();
    in.robot_wrench_est = force(8.0 * kAxis);
    in.tool_axial_force = 8.0;
    CHECK(step(ModeState{}, in, cfg).state.mode == Mode::Idle);
  }
  SUBCASE("pulling the pin and removing the tool readies natural mode") {
    for (Mode from : {Mode::Idle, Mode::Teleoperation, Mode::Kinesthetic}) {
      ControllerInputs in = attached_idle();
      in.tool_attached = false;
      in.pin_pulled = true;
      const auto r = step(ModeState{from, 0.0, {}}, in, cfg);
      CHECK(r.state.mode == Mode::NaturalReady);
      CHECK(r.state.entered_at == kNow);
      CHECK(r.signals.led.pattern == LedPattern::FlashBlue);
    }
  }
  SUBCASE("tracking loss beeps") {
    ControllerInputs in = attached_idle();
    in.tool_attached = false;
    in.pin_pulled = true;
    in.tracking_status = TrackingStatus::Lost;
    const auto r = step(ModeState{Mode::NaturalTracking, 0.0, {}}, in, cfg);
    CHECK(r.state.mode == Mode::NaturalLost);
    CHECK(r.signals.beep);
  }
  SUBCASE("reattaching returns to idle") {
    for (Mode from : {Mode::NaturalReady, Mode::NaturalTracking, Mode::NaturalLost}) {
      ControllerInputs in = attached_idle();
      CHECK(step(ModeState{from, 0.0, {}}, in, cfg).state.mode == Mode::Idle);
    }
  }
  SUBCASE("attached with pin pulled falls back to idle with an error") {
    for (Mode from : kAllModes) {
      ControllerInputs in = attached_idle();
      in.pin_pulled = true;
      in.device_pressed = true;
      const auto r = step(ModeState{from, 0.0, {}}, in, cfg);
      CHECK(r.state.mode == Mode::Idle);
      CHECK(r.input_error);
      CHECK(r.command.kind == CommandKind::Hold);
    }
  }
  SUBCASE("non-finite axial force falls back to idle with an error") {
    ControllerInputs in = attached_idle();
    in.tool_axial_force = std::nan("");
    const auto r = step(ModeState{Mode::Kinesthetic, 0.0, {}}, in, cfg);
    CHECK(r.state.mode == Mode::Idle);
    CHECK(r.input_error);
  }
}

TEST_CASE("mode_controller: kinesthetic exit requires a quiet hold period") {
  const ControllerConfig cfg;
  ModeState s{Mode::Kinesthetic, 0.0, {}};
  ControllerInputs in = attached_idle(0.0);
  double t = 0.0;
  const double dt = 0.02;
  // Quiet for 0.9 s, then a spike resets the timer.
  for (; t < 0.9 - 1e-12; t += dt) {
    in.time = t;
    s = step(s, in, cfg).state;
    REQUIRE(s.mode == Mode::Kinesthetic);
  }
  in.time = t;
  in.robot_wrench_est = force(4.0 * kAxis);
  s = step(s, in, cfg).state;
  CHECK(s.mode == Mode::Kinesthetic);
  CHECK_FALSE(s.quiet_since.has_value());

  in.robot_wrench_est.setZero();
  const double quiet_start = t + dt;
  int ticks = 0;
  for (t = quiet_start; s.mode == Mode::Kinesthetic && ticks < 1000; t += dt, ++ticks) {
    in.time = t;
    s = step(s, in, cfg).state;
  }
  CHECK(s.mode == Mode::Idle);
  const double exit_after = t - dt - quiet_start;
  CHECK(exit_after >= 1.0 - 1e-9);
  CHECK(exit_after <= 1.0 + dt + 1e-9);
}

TEST_CASE("mode_controller: natural ready times out to lost without a sighting") {
  const ControllerConfig cfg;
  ControllerInputs in = attached_idle(0.0);
  in.tool_attached = false;
  in.pin_pulled = true;
  ModeState s = step(ModeState{}, in, cfg).state;
  REQUIRE(s.mode == Mode::NaturalReady);
  in.time = 0.6;
  CHECK(step(s, in, cfg).state.mode == Mode::NaturalReady);
  in.time = 0.62;
  const auto r = step(s, in, cfg);
  CHECK(r.state.mode == Mode::NaturalLost);
  CHECK(r.signals.beep);
}

TEST_CASE("mode_controller: exhaustive transition table") {
  const ControllerConfig cfg;
  const auto symbols = alphabet();
  long checked = 0;
  for (Mode m : kAllModes) {
    for (const Symbol& s : symbols) {
      const auto r = step(realize_state(m, s), realize(s), cfg);
      const Expected e = oracle(m, s);
      INFO("from " << to_string(m) << " pressed=" << s.pressed << " attached=" << s.attached << " pin=" << s.pin
                   << " marker=" << s.marker << " lost=" << s.lost << " over=" << s.over
                   << " elapsed=" << s.elapsed << " axial=" << static_cast<int>(s.axial));
      CHECK(r.state.mode == e.mode);
      CHECK(r.input_error == e.error);
      ++checked;
    }
  }
  CHECK(checked == 6 * 512);
}

TEST_CASE("mode_controller: every mode is reachable and has an exit") {
  const ControllerConfig cfg;
  const auto symbols = alphabet();
  std::set<Mode> reached{Mode::Idle};
  std::vector<Mode> frontier{Mode::Idle};
  std::set<Mode> has_exit;
  while (!frontier.empty()) {
    const Mode m = frontier.back();
    frontier.pop_back();
    for (const Symbol& s : symbols) {
      const Mode next = step(realize_state(m, s), realize(s), cfg).state.mode;
      if (next != m) has_exit.insert(m);
      if (reached.insert(next).second) frontier.push_back(next);
    }
  }
  CHECK(reached.size() == 6);
  CHECK(has_exit.size() == 6);
}

TEST_CASE("mode_controller: attachment invariants and signal bijection over the alphabet") {
  const ControllerConfig cfg;
  for (Mode m : kAllModes) {
    for (const Symbol& s : alphabet()) {
      const ControllerInputs in = realize(s);
      const auto r = step(realize_state(m, s), in, cfg);
      const Mode n = r.state.mode;
      if (is_natural(n)) {
        CHECK_FALSE(in.tool_attached);
        CHECK(r.command.kind == CommandKind::TrackViewpoint);
      }
      if (n == Mode::Teleoperation || n == Mode::Kinesthetic) CHECK(in.tool_attached);
      CHECK((r.signals.led.pattern == LedPattern::FlashBlue) == (n == Mode::NaturalReady));
      CHECK(r.signals.beep == (n == Mode::NaturalLost));
      CHECK(r.command.twist.head<3>().norm() <= cfg.teleop.max_linear_speed + 1e-12);
      if (n == Mode::Teleoperation) CHECK(contact_force_magnitude(in) <= cfg.teleop.force_limit);
    }
  }
}

TEST_CASE("mode_controller: random traces are deterministic and keep the invariants") {
  const ControllerConfig cfg;
  std::mt19937_64 rng(7);
  std::bernoulli_distribution coin(0.5);
  std::bernoulli_distribution rare(0.05);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> fmag(0.0, 25.0);

  std::vector<ControllerInputs> trace;
  bool attached = true, pin = false;
  for (int k = 0; k < 20000; ++k) {
    ControllerInputs in;
    in.time = 0.02 * k;
    if (rare(rng)) attached = !attached;
    if (rare(rng)) pin = !pin;
    in.tool_attached = attached;
    in.pin_pulled = pin;
    in.device_pressed = coin(rng);
    for (int i = 0; i < 6; ++i) in.device_twist[i] = u(rng);
    in.robot_wrench_est = force(Vec3(u(rng), u(rng), u(rng)).normalized() * fmag(rng));
    in.tool_axial_force = fmag(rng) * 0.3;
    in.tool_axis = Vec3(u(rng), u(rng), u(rng)).normalized();
    in.marker_seen_now = rare(rng);
    in.tracking_status = coin(rng) ? TrackingStatus::Tracking : TrackingStatus::Lost;
    trace.push_back(in);
  }

  auto run = [&] {
    std::vector<Mode> modes;
    ModeState s;
    InputDebouncer deb(cfg.debounce_ticks);
    for (const auto& raw : trace) {
      const ControllerInputs in = deb.filter(raw);
      const auto r = step(s, in, cfg);
      modes.push_back(r.state.mode);
      CHECK((r.signals.led.pattern == LedPattern::FlashBlue) == (r.state.mode == Mode::NaturalReady));
      CHECK(r.signals.beep == (r.state.mode == Mode::NaturalLost));
      CHECK(r.command.twist.head<3>().norm() <= cfg.teleop.max_linear_speed + 1e-12);
      if (r.state.mode == Mode::Teleoperation) CHECK(contact_force_magnitude(in) <= cfg.teleop.force_limit);
      s = r.state;
    }
    return modes;
  };
  const auto a = run();
  const auto b = run();
  CHECK(a == b);
  std::set<Mode> seen(a.begin(), a.end());
  CHECK(seen.size() >= 4);
}

TEST_CASE("mode_controller: signals per mode") {
  const ControllerConfig cfg;
  ControllerInputs in = attached_idle();
  CHECK(signals_for(Mode::Idle, in, cfg).led == Led{LedPattern::Solid, LedColor::White, 0.0});
  CHECK(signals_for(Mode::Kinesthetic, in, cfg).led == Led{LedPattern::Solid, LedColor::Green, 0.0});
  CHECK(signals_for(Mode::NaturalTracking, in, cfg).led == Led{LedPattern::Solid, LedColor::Blue, 0.0});
  CHECK(signals_for(Mode::NaturalLost, in, cfg).led.color == LedColor::Red);

  in.robot_wrench_est = force(Vec3(0, 0, 7.5));
  Signals s = signals_for(Mode::Teleoperation, in, cfg);
  CHECK(s.led.pattern == LedPattern::ForceGradient);
  CHECK(s.led.level == doctest::Approx(0.5));
  CHECK_FALSE(s.warning_tone);
  in.robot_wrench_est = force(Vec3(0, 0, 12.5));
  s = signals_for(Mode::Teleoperation, in, cfg);
  CHECK(s.warning_tone);
  CHECK_FALSE(s.beep);
}

TEST_CASE("mode_controller: force_feedback_level examples") {
  const TeleopConfig c;
  CHECK(force_feedback_level(0.0, c) == 0.0);
  CHECK(force_feedback_level(15.0, c) == 1.0);
  CHECK(force_feedback_level(7.5, c) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(force_feedback_level(40.0, c) == 1.0);
  CHECK(force_feedback_level(-7.5, c) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("mode_controller: force_discrepancy examples") {
  CHECK(force_discrepancy(force(5.0 * kAxis), 0.0, kAxis) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(force_discrepancy(force(3.0 * kAxis), 3.0, kAxis) == 0.0);
  CHECK(force_discrepancy(force(8.0 * kAxis), 0.0, kAxis) == doctest::Approx(8.0).epsilon(1e-15));
  // Off-axis components do not count.
  CHECK(force_discrepancy(force(Vec3(10, 0, 0)), 0.0, kAxis) == 0.0);
  CHECK(axial_pull(force(-4.0 * kAxis), 0.0, kAxis) == doctest::Approx(-4.0).epsilon(1e-15));
}

TEST_CASE("mode_controller: admittance_command examples") {
  const TeleopConfig c;
  ControllerInputs in = attached_idle();
  in.device_pressed = true;

  SUBCASE("zero input gives zero command") { CHECK(admittance_command(in, c).isZero(0.0)); }
  SUBCASE("unit x input without contact") {
    in.device_twist << 1, 0, 0, 0, 0, 0;
    const Vec6 v = admittance_command(in, c);
    CHECK(v[0] == doctest::Approx(0.05).epsilon(1e-15));
    CHECK(v.tail<5>().isZero(0.0));
  }
  SUBCASE("not pressed gives zero command") {
    in.device_pressed = false;
    in.device_twist << 1, 1, 1, 1, 1, 1;
    CHECK(admittance_command(in, c).isZero(0.0));
  }
  SUBCASE("contact at the limit stops motion into the contact") {
    in.device_twist << 0, 0, -1, 0, 0, 0;  // pushing down
    in.robot_wrench_est = force(Vec3(0, 0, 15.0));  // surface pushes back up
    CHECK(admittance_command(in, c)[2] == 0.0);
  }
  SUBCASE("partial contact reduces the into-contact speed") {
    in.device_twist << 0.5, 0, -1, 0, 0, 0;
    in.robot_wrench_est = force(Vec3(0, 0, 6.0));
    const Vec6 v = admittance_command(in, c);
    CHECK(v[2] == doctest::Approx(-(0.05 - c.admittance_compliance * 6.0)).epsilon(1e-12));
    CHECK(v[0] == doctest::Approx(0.025).epsilon(1e-12));
  }
  SUBCASE("motion away from the contact is untouched") {
    in.device_twist << 0, 0, 1, 0, 0, 0;
    in.robot_wrench_est = force(Vec3(0, 0, 15.0));
    CHECK(admittance_command(in, c)[2] == doctest::Approx(0.05).epsilon(1e-15));
  }
  SUBCASE("speed cap") {
    TeleopConfig fast = c;
    fast.lin_gain = 1.0;
    in.device_twist << 1, 1, 1, 0, 0, 0;
    CHECK(admittance_command(in, fast).head<3>().norm() == doctest::Approx(fast.max_linear_speed));
  }
}

TEST_CASE("mode_controller: debouncer") {
  InputDebouncer deb(3);
  ControllerInputs in = attached_idle();
  in.device_pressed = false;
  CHECK_FALSE(deb.filter(in).device_pressed);

  // A change passes through at once, then flicker is suppressed for the hold window.
  in.device_pressed = true;
  CHECK(deb.filter(in).device_pressed);
  in.device_pressed = false;
  CHECK(deb.filter(in).device_pressed);
  in.device_pressed = true;
  CHECK(deb.filter(in).device_pressed);
  in.device_pressed = false;
  CHECK_FALSE(deb.filter(in).device_pressed);

  // Chattering contact sensor yields at most one change per three ticks.
  InputDebouncer d2(3);
  int changes = 0;
  bool prev = true;
  for (int k = 0; k < 300; ++k) {
    ControllerInputs x = attached_idle();
    x.tool_attached = (k % 2) == 0;
    const bool v = d2.filter(x).tool_attached;
    if (k > 0 && v != prev) ++changes;
    prev = v;
  }
  CHECK(changes <= 100);
  CHECK(changes >= 1);
}
