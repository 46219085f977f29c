#include "vdi/tool_tracker.hpp"

#include <algorithm>
#include <set>
#include <string>

namespace vdi {

namespace {

bool finite_pose(const Pose& p) {
  return p.position.allFinite() && p.rotation.quaternion().coeffs().allFinite();
}

Mat6 symmetrize(const Mat6& m) { return 0.5 * (m + m.transpose()); }

constexpr double kTimeEpsilon = 1e-9;

}  // namespace

void MarkerLayout::validate() const {
  if (entries.empty()) throw std::invalid_argument("marker layout: at least one marker required");
  std::set<int> ids;
  for (const auto& e : entries) {
    if (!ids.insert(e.id).second) {
      throw std::invalid_argument("marker layout: duplicate marker id " + std::to_string(e.id));
    }
    if (!(e.edge_length > 0.0)) {
      throw std::invalid_argument("marker layout: marker " + std::to_string(e.id) +
                                  " edge_length must be positive");
    }
  }
}

const MarkerLayoutEntry* MarkerLayout::find(int id) const {
  const auto it = std::find_if(entries.begin(), entries.end(), [id](const auto& e) { return e.id == id; });
  return it == entries.end() ? nullptr : &*it;
}

void TrackerConfig::validate() const {
  if ((process_noise.array() < 0.0).any()) throw std::invalid_argument("tracker.process_noise: negative variance");
  if ((measurement_noise.array() < 0.0).any()) {
    throw std::invalid_argument("tracker.measurement_noise: negative variance");
  }
  if ((initial_variance.array() <= 0.0).any()) {
    throw std::invalid_argument("tracker.initial_variance: must be positive");
  }
  if (!(lost_timeout > 0.0)) throw std::invalid_argument("tracker.lost_timeout: must be positive");
  if (!(publish_period > 0.0)) throw std::invalid_argument("tracker.publish_period: must be positive");
}

UnknownMarkerError::UnknownMarkerError(int id)
    : std::invalid_argument("unknown marker id " + std::to_string(id)), id_(id) {}

Pose marker_to_tool_pose(const MarkerObservation& obs, const MarkerLayout& layout,
                         const Pose& camera_in_world) {
  const MarkerLayoutEntry* entry = layout.find(obs.marker_id);
  if (entry == nullptr) throw UnknownMarkerError(obs.marker_id);
  return camera_in_world * obs.marker_in_camera * invert(entry->marker_in_tool);
}

ToolEstimate ekf_predict(const ToolEstimate& state, double dt, const Vec6& process_noise) {
  ToolEstimate out = state;
  if (dt <= 0.0) return out;
  out.covariance.diagonal() += process_noise * dt;
  out.timestamp = state.timestamp + dt;
  return out;
}

Vec6 pose_error(const Pose& truth, const Pose& estimate) {
  Vec6 e;
  e.head<3>() = truth.position - estimate.position;
  e.tail<3>() = (truth.rotation * estimate.rotation.inverse()).log();
  return e;
}

double nees(const ToolEstimate& estimate, const Pose& truth) {
  const Vec6 e = pose_error(truth, estimate.tool_in_world);
  return e.dot(estimate.covariance.ldlt().solve(e));
}

UpdateResult ekf_update(const ToolEstimate& state, const Pose& measured_tool_pose,
                        const Vec6& measurement_noise) {
  return ekf_update_batch(state, std::span<const Pose>(&measured_tool_pose, 1), measurement_noise);
}

UpdateResult ekf_update_batch(const ToolEstimate& state, std::span<const Pose> measurements,
                              const Vec6& measurement_noise) {
  UpdateResult result{state, false};
  if (measurements.empty()) return result;
  for (const Pose& m : measurements) {
    if (!finite_pose(m)) {
      result.rejected = true;
      return result;
    }
  }

  const auto m = static_cast<Eigen::Index>(measurements.size());
  const Eigen::Index rows = 6 * m;
  Eigen::MatrixXd h(rows, 6);
  Eigen::VectorXd innovation(rows);
  Eigen::VectorXd noise(rows);
  for (Eigen::Index k = 0; k < m; ++k) {
    h.block(6 * k, 0, 6, 6).setIdentity();
    innovation.segment<6>(6 * k) = pose_error(measurements[static_cast<std::size_t>(k)], state.tool_in_world);
    noise.segment<6>(6 * k) = measurement_noise;
  }

  const Mat6& p = state.covariance;
  Eigen::MatrixXd s = h * p * h.transpose();
  s.diagonal() += noise;
  s.diagonal().array() += 1e-15;  // keeps S invertible for exact measurements with a collapsed prior
  const Eigen::MatrixXd gain = s.ldlt().solve(h * p).transpose();  // 6 x rows

  const Vec6 delta = gain * innovation;
  ToolEstimate& out = result.state;
  out.tool_in_world.position = state.tool_in_world.position + delta.head<3>();
  out.tool_in_world.rotation = Rotation::exp(delta.tail<3>()) * state.tool_in_world.rotation;

  // Joseph form
  const Mat6 i_kh = Mat6::Identity() - gain * h;
  out.covariance = symmetrize(i_kh * p * i_kh.transpose() +
                              gain * noise.asDiagonal() * gain.transpose());
  return result;
}

TrackerState::TrackerState(TrackerConfig cfg, MarkerLayout lay)
    : config(std::move(cfg)), layout(std::move(lay)) {}

TrackerState ingest(TrackerState state, std::span<const MarkerObservation> observations,
                    const Pose& camera_in_world, double now) {
  state.published_now = false;

  std::vector<const MarkerObservation*> ordered;
  ordered.reserve(observations.size());
  for (const auto& obs : observations) {
    if (state.layout.find(obs.marker_id) == nullptr || !finite_pose(obs.marker_in_camera)) {
      ++state.rejected_total;
      continue;
    }
    ordered.push_back(&obs);
  }
  std::stable_sort(ordered.begin(), ordered.end(), [](const auto* a, const auto* b) {
    return a->timestamp != b->timestamp ? a->timestamp < b->timestamp : a->marker_id < b->marker_id;
  });

  for (std::size_t i = 0; i < ordered.size();) {
    const double ts = ordered[i]->timestamp;
    std::vector<Pose> group;
    for (; i < ordered.size() && ordered[i]->timestamp == ts; ++i) {
      group.push_back(marker_to_tool_pose(*ordered[i], state.layout, camera_in_world));
    }

    if (!state.filter) {
      ToolEstimate init;
      init.tool_in_world = group.front();
      init.covariance = state.config.initial_variance.asDiagonal();
      init.timestamp = ts;
      state.filter = init;
    } else {
      state.filter = ekf_predict(*state.filter, ts - state.filter->timestamp, state.config.process_noise);
    }

    const UpdateResult r = ekf_update_batch(*state.filter, group, state.config.measurement_noise);
    if (r.rejected) {
      state.rejected_total += static_cast<long>(group.size());
      continue;
    }
    state.filter = r.state;
    state.fused_since_publish += static_cast<int>(group.size());
    state.fused_total += static_cast<long>(group.size());
    state.last_seen = std::max(state.last_seen.value_or(ts), ts);
  }

  if (state.filter) {
    const bool due = !state.last_publish_time ||
                     now - *state.last_publish_time >= state.config.publish_period - kTimeEpsilon;
    if (due) {
      ToolEstimate out = ekf_predict(*state.filter, now - state.filter->timestamp, state.config.process_noise);
      out.timestamp = now;
      out.tracking = tracking_status(state, now) == TrackingStatus::Tracking;
      state.published = out;
      state.last_publish_time = now;
      state.published_now = true;
      state.fused_since_publish = 0;
    }
  }
  return state;
}

TrackingStatus tracking_status(const TrackerState& state, double now, double timeout) {
  if (!state.last_seen) return TrackingStatus::Lost;
  return now - *state.last_seen > timeout + kTimeEpsilon ? TrackingStatus::Lost : TrackingStatus::Tracking;
}

}  // namespace vdi
