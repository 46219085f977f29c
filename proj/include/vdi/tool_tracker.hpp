#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "vdi/se3.hpp"

namespace vdi {

struct MarkerLayoutEntry {
  int id = 0;
  Pose marker_in_tool;  ///< marker z-axis is the face normal
  double edge_length = 0.03;
};

/// Known fiducial pattern on the tool.
struct MarkerLayout {
  std::vector<MarkerLayoutEntry> entries;

  /// Throws std::invalid_argument on an empty layout or duplicate ids.
  void validate() const;
  const MarkerLayoutEntry* find(int id) const;
};

struct MarkerObservation {
  int marker_id = 0;
  Pose marker_in_camera;
  double timestamp = 0.0;
};

struct ToolEstimate {
  Pose tool_in_world;
  /// Error state: world position error, then left rotation-vector error.
  Mat6 covariance = Mat6::Identity();
  double timestamp = 0.0;
  bool tracking = false;
};

enum class TrackingStatus { Tracking, Lost };

struct TrackerConfig {
  Vec6 process_noise = (Vec6() << 1e-3, 1e-3, 1e-3, 1e-2, 1e-2, 1e-2).finished();  ///< per second
  Vec6 measurement_noise =
      (Vec6() << 2.5e-5, 2.5e-5, 2.5e-5, 4e-4, 4e-4, 4e-4).finished();  ///< 5 mm, 0.02 rad
  Vec6 initial_variance = (Vec6() << 0.01, 0.01, 0.01, 0.1, 0.1, 0.1).finished();
  double lost_timeout = 0.6;
  double publish_period = 0.2;

  void validate() const;
};

class UnknownMarkerError : public std::invalid_argument {
 public:
  explicit UnknownMarkerError(int id);
  int id() const { return id_; }

 private:
  int id_;
};

/// camera_in_world * marker_in_camera * invert(marker_in_tool). Throws UnknownMarkerError.
Pose marker_to_tool_pose(const MarkerObservation& obs, const MarkerLayout& layout,
                         const Pose& camera_in_world);

/// Random-walk prediction: mean unchanged, covariance grows by diag(process_noise) * dt.
ToolEstimate ekf_predict(const ToolEstimate& state, double dt, const Vec6& process_noise);

struct UpdateResult {
  ToolEstimate state;
  bool rejected = false;  ///< non-finite measurement; state returned unchanged
};

UpdateResult ekf_update(const ToolEstimate& state, const Pose& measured_tool_pose,
                        const Vec6& measurement_noise);

/// Joint update with several simultaneous full-pose measurements. All
/// innovations are linearized about the same prior, so the result does not
/// depend on the order of `measurements`.
UpdateResult ekf_update_batch(const ToolEstimate& state, std::span<const Pose> measurements,
                              const Vec6& measurement_noise);

/// Error vector of `truth` relative to `estimate` in the filter's error-state convention.
Vec6 pose_error(const Pose& truth, const Pose& estimate);

/// Normalized estimation error squared of an estimate against ground truth.
double nees(const ToolEstimate& estimate, const Pose& truth);

struct TrackerState {
  TrackerConfig config;
  MarkerLayout layout;
  std::optional<ToolEstimate> filter;
  std::optional<ToolEstimate> published;
  std::optional<double> last_seen;
  std::optional<double> last_publish_time;
  bool published_now = false;
  int fused_since_publish = 0;
  long fused_total = 0;
  long rejected_total = 0;

  TrackerState() = default;
  TrackerState(TrackerConfig config, MarkerLayout layout);
};

/**
 * Fuses a batch of marker sightings and publishes on the throttled schedule.
 *
 * Observations are processed in (timestamp, marker id) order; sightings that
 * share a timestamp are fused in one joint update. The first sighting ever
 * initializes the filter. A new estimate is published when at least one
 * publish period has passed since the previous publication (the first one is
 * published as soon as the filter exists). Unknown marker ids and non-finite
 * poses are counted in rejected_total and skipped.
 */
TrackerState ingest(TrackerState state, std::span<const MarkerObservation> observations,
                    const Pose& camera_in_world, double now);

TrackingStatus tracking_status(const TrackerState& state, double now, double timeout);
inline TrackingStatus tracking_status(const TrackerState& state, double now) {
  return tracking_status(state, now, state.config.lost_timeout);
}

}  // namespace vdi
