#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "vdi/scenario.hpp"
#include "vdi/session.hpp"

namespace vdi {

using Json = nlohmann::json;

inline constexpr const char* kLogFormat = "vdi-run/1";

/// First line of a run log: scenario identity, constraints and goals.
Json header_row(const Scenario& scenario);
/// One line per tick.
Json tick_row(const TickRecord& record);
Json end_row(const std::string& status, long ticks, std::optional<long> violation_tick = std::nullopt);

Json pose_json(const Pose& pose);
Json camera_json(const CameraDecision& decision);
Json objectives_json(const ObjectiveTerms& terms);

struct PoseErrorStats {
  long samples = 0;
  double position_mean = 0.0;  ///< [m]
  double position_max = 0.0;
  double rotation_mean = 0.0;  ///< [rad]
  double rotation_max = 0.0;
};

struct MetricsSummary {
  std::string scenario;
  std::uint64_t seed = 0;
  long ticks = 0;
  double duration = 0.0;
  std::string status = "ok";  ///< "ok" or "invariant_violation"

  long natural_ticks = 0;
  long tracking_ticks = 0;
  double tracking_uptime = 0.0;  ///< NaturalTracking ticks / natural-mode ticks; 0 without natural ticks
  PoseErrorStats pose_error;     ///< published estimate vs truth during NaturalTracking

  long constraint_violations = 0;
  std::optional<long> first_violation_tick;

  std::map<std::string, long> mode_ticks;
  std::map<std::string, long> transitions;  ///< "From->To"
  std::vector<std::pair<double, std::string>> mode_entries;
  long beep_count = 0;  ///< beep onsets
  long input_errors = 0;

  long publications = 0;
  double publish_spacing_min = 0.0;
  double publish_spacing_max = 0.0;

  double mean_phi1 = 0.0;  ///< over NaturalTracking ticks, against the true tool position
  double mean_phi2 = 0.0;
  double mean_camera_tool_distance = 0.0;

  int fittings = 0;
  double rolled_distance = 0.0;
  bool goal_fittings = true;
  bool goal_rolled = true;
  bool goal_modes = true;
  bool completed = true;

  Json to_json() const;
};

/**
 * Folds log rows into a MetricsSummary. Run and replay feed it the same
 * parsed rows, so both produce identical summaries.
 */
class Summarizer {
 public:
  void header(const Json& row);
  /// Returns false when the row breaks a camera bound or rate limit.
  bool tick(const Json& row);
  void end(const Json& row);
  MetricsSummary summary() const;
  long ticks_seen() const { return ticks_; }
  std::optional<long> last_tick() const { return last_tick_; }

 private:
  Json header_;
  long ticks_ = 0;
  std::optional<long> last_tick_;
  std::optional<double> last_time_;
  std::optional<Json> last_camera_;
  std::optional<std::string> last_mode_;
  bool last_beep_ = false;
  std::optional<double> last_publication_;
  MetricsSummary s_;
  double err_pos_sum_ = 0.0;
  double err_rot_sum_ = 0.0;
  double phi1_sum_ = 0.0;
  double phi2_sum_ = 0.0;
  double dist_sum_ = 0.0;
  bool ended_ = false;
};

/// True when the camera lies within the box and angle ranges of `header`.
bool camera_within_bounds(const Json& header, const Json& camera, double tolerance = 1e-9);
/// True when the step between two camera rows respects the rate caps of `header`.
bool camera_step_within_caps(const Json& header, const Json& prev, const Json& next, double dt);

struct RunOutcome {
  MetricsSummary summary;
  bool violated = false;
};

/// Runs `scenario` and streams the log to `log`. Stops at the first
/// invariant violation, recording it in the final row.
RunOutcome run_to_log(const Scenario& scenario, std::ostream& log);

class ReplayError : public std::runtime_error {
 public:
  ReplayError(const std::string& message, std::optional<long> last_valid_tick)
      : std::runtime_error(message), last_valid_tick_(last_valid_tick) {}
  std::optional<long> last_valid_tick() const { return last_valid_tick_; }

 private:
  std::optional<long> last_valid_tick_;
};

/// Recomputes the summary from a log stream. Throws ReplayError on a
/// malformed or truncated log.
MetricsSummary replay_log(std::istream& log);

/// Summary document path for a log path: "run.jsonl" -> "run.summary.json".
std::string summary_path_for(const std::string& log_path);

std::string dump_summary(const MetricsSummary& summary);

}  // namespace vdi
