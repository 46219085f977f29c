#pragma once

#include <optional>
#include <string_view>

#include "vdi/se3.hpp"
#include "vdi/tool_tracker.hpp"

namespace vdi {

enum class Mode { Idle, Teleoperation, Kinesthetic, NaturalReady, NaturalTracking, NaturalLost };

inline constexpr Mode kAllModes[] = {Mode::Idle,         Mode::Teleoperation,   Mode::Kinesthetic,
                                     Mode::NaturalReady, Mode::NaturalTracking, Mode::NaturalLost};

std::string_view to_string(Mode mode);
std::optional<Mode> mode_from_string(std::string_view name);
bool is_natural(Mode mode);

/// One tick of (debounced) sensor readings.
struct ControllerInputs {
  Vec6 device_twist = Vec6::Zero();  ///< remote input device, unit-less in [-1, 1]
  bool device_pressed = false;
  Vec6 robot_wrench_est = Vec6::Zero();  ///< external wrench on the robot [N, N m], world frame
  double tool_axial_force = 0.0;         ///< uni-axial tool sensor, positive = pull along tool z
  Vec3 tool_axis = Vec3(0, 0, -1);       ///< tool z-axis in world
  bool tool_attached = true;
  bool pin_pulled = false;
  bool marker_seen_now = false;
  TrackingStatus tracking_status = TrackingStatus::Lost;
  double time = 0.0;
};

enum class LedPattern { Off, Solid, FlashBlue, ForceGradient };
enum class LedColor { None, White, Green, Blue, Red, Amber };

std::string_view to_string(LedPattern pattern);
std::string_view to_string(LedColor color);

struct Led {
  LedPattern pattern = LedPattern::Off;
  LedColor color = LedColor::None;
  double level = 0.0;  ///< only meaningful for ForceGradient

  bool operator==(const Led&) const = default;
};

struct Signals {
  Led led;
  bool beep = false;          ///< lost-tracking alert
  bool warning_tone = false;  ///< teleoperation force approaching the limit

  bool operator==(const Signals&) const = default;
};

struct TeleopConfig {
  double lin_gain = 0.05;  ///< [m/s per unit input]
  double ang_gain = 0.3;   ///< [rad/s per unit input]
  double force_limit = 15.0;
  double warn_fraction = 0.8;
  double admittance_compliance = 0.002;  ///< [m/(s N)]
  double max_linear_speed = 0.1;
  double max_angular_speed = 0.5;

  void validate() const;
};

struct ControllerConfig {
  TeleopConfig teleop;
  double pull_threshold = 3.0;          ///< [N]
  double discrepancy_threshold = 2.5;   ///< [N]
  double kinesthetic_hold_time = 1.0;   ///< [s]
  double ready_timeout = 0.6;           ///< [s] NaturalReady without a sighting
  int debounce_ticks = 3;

  void validate() const;
};

struct ModeState {
  Mode mode = Mode::Idle;
  double entered_at = 0.0;
  std::optional<double> quiet_since;  ///< kinesthetic: discrepancy below threshold since

  bool operator==(const ModeState&) const = default;
};

enum class CommandKind { Hold, Twist, FollowHand, TrackViewpoint };
std::string_view to_string(CommandKind kind);

struct RobotCommand {
  CommandKind kind = CommandKind::Hold;
  Vec6 twist = Vec6::Zero();  ///< only for Twist
};

struct StepResult {
  ModeState state;
  Signals signals;
  RobotCommand command;
  bool input_error = false;  ///< contradictory or non-finite sensors; forced to Idle
};

/**
 * Demonstration-mode transition function. Pure: the result depends only on
 * the arguments.
 *
 *   any            attached && pin pulled, or non-finite      -> Idle (input_error)
 *   Idle           attached, pressed, contact <= limit        -> Teleoperation
 *   Idle           attached, discrepancy > thr, pull > thr    -> Kinesthetic
 *   Teleoperation  contact > force_limit                      -> Idle
 *   Kinesthetic    discrepancy <= thr for hold_time           -> Idle
 *   attached modes pin pulled && detached                     -> NaturalReady
 *   Teleop/Kin     detached without pin                       -> Idle
 *   NaturalReady   marker seen                                -> NaturalTracking
 *   NaturalReady   no sighting for ready_timeout              -> NaturalLost
 *   NaturalTracking tracking lost                             -> NaturalLost
 *   NaturalLost    marker seen                                -> NaturalTracking
 *   Natural*       attached                                   -> Idle
 */
StepResult step(const ModeState& state, const ControllerInputs& inputs, const ControllerConfig& config);

/// Teleoperation twist: scaled device input with the into-contact velocity
/// reduced in proportion to the measured contact force, and zero at the limit.
Vec6 admittance_command(const ControllerInputs& inputs, const TeleopConfig& config);

/// |contact_force| / force_limit clamped to [0, 1].
double force_feedback_level(double contact_force, const TeleopConfig& config);

/// |robot force along the tool axis - tool axial force|.
double force_discrepancy(const Vec6& robot_wrench_est, double tool_axial_force, const Vec3& tool_axis_in_world);

/// Signed version of force_discrepancy; positive when the operator pulls along the tool axis.
double axial_pull(const Vec6& robot_wrench_est, double tool_axial_force, const Vec3& tool_axis_in_world);

double contact_force_magnitude(const ControllerInputs& inputs);

Signals signals_for(Mode mode, const ControllerInputs& inputs, const ControllerConfig& config);

/// Leading-edge debounce for the switch-type inputs (device button, contact
/// sensor, pin): a change passes through immediately, then the input is held
/// for `ticks` samples before another change is accepted.
class InputDebouncer {
 public:
  explicit InputDebouncer(int ticks = 3) : ticks_(ticks) {}

  ControllerInputs filter(const ControllerInputs& raw);

 private:
  struct Channel {
    bool value = false;
    bool initialized = false;
    int hold = 0;
    bool update(bool raw, int ticks);
  };

  int ticks_;
  Channel pressed_;
  Channel attached_;
  Channel pin_;
};

}  // namespace vdi
