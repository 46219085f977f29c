#include "vdi/run_log.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <istream>
#include <ostream>

namespace vdi {

namespace {

Json vec_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vec3 vec3_of(const Json& j) { return Vec3(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()); }

Pose pose_of(const Json& j) {
  const Json& q = j.at("quaternion");
  return Pose{vec3_of(j.at("position")),
              Rotation(Eigen::Quaterniond(q.at(0).get<double>(), q.at(1).get<double>(), q.at(2).get<double>(),
                                          q.at(3).get<double>()))};
}

std::string_view status_name(TrackingStatus s) { return s == TrackingStatus::Tracking ? "tracking" : "lost"; }

}  // namespace

Json pose_json(const Pose& p) {
  const auto& q = p.rotation.quaternion();
  return {{"position", vec_json(p.position)}, {"quaternion", {q.w(), q.x(), q.y(), q.z()}}};
}

Json camera_json(const CameraDecision& d) {
  return {{"position", vec_json(d.position)}, {"theta_x", d.theta_x}, {"theta_y", d.theta_y}};
}

Json objectives_json(const ObjectiveTerms& t) {
  return {{"phi1", t.phi1}, {"phi2", t.phi2}, {"phi3", t.phi3}, {"phi4", t.phi4}, {"total", t.total}};
}

Json header_row(const Scenario& s) {
  const OptimizerConfig& o = s.optimizer;
  Json modes = Json::array();
  for (Mode m : s.goals.require_modes) modes.push_back(std::string(to_string(m)));
  return {
      {"type", "header"},
      {"format", kLogFormat},
      {"scenario", s.name},
      {"seed", s.seed},
      {"tick", s.tick},
      {"duration", s.duration},
      {"bounds",
       {{"pos_lo", vec_json(o.pos_lo)},
        {"pos_hi", vec_json(o.pos_hi)},
        {"theta_x", {o.theta_x_lo, o.theta_x_hi}},
        {"theta_y", {o.theta_y_lo, o.theta_y_hi}}}},
      {"caps", {{"v_lin_max", o.v_lin_max}, {"v_ang_max", o.v_ang_max}}},
      {"goals",
       {{"min_fittings", s.goals.min_fittings},
        {"min_rolled_distance", s.goals.min_rolled_distance},
        {"require_modes", modes}}},
      {"marks", s.marks},
  };
}

Json tick_row(const TickRecord& r) {
  Json visible = Json::array();
  for (int id : r.visible) visible.push_back(id);
  Json estimate = nullptr;
  if (r.estimate) {
    estimate = pose_json(r.estimate->tool_in_world);
    estimate["timestamp"] = r.estimate->timestamp;
  }
  return {
      {"type", "tick"},
      {"tick", r.tick},
      {"time", r.time},
      {"mode", std::string(to_string(r.mode))},
      {"led",
       {{"pattern", std::string(to_string(r.signals.led.pattern))},
        {"color", std::string(to_string(r.signals.led.color))},
        {"level", r.signals.led.level}}},
      {"beep", r.signals.beep},
      {"warning_tone", r.signals.warning_tone},
      {"input_error", r.input_error},
      {"command", {{"kind", std::string(to_string(r.command.kind))}, {"twist", vec_json(r.command.twist)}}},
      {"tool_true", pose_json(r.tool_true)},
      {"tool_estimate", estimate},
      {"published", r.published},
      {"tracking", std::string(status_name(r.tracking))},
      {"camera_decision", camera_json(r.camera)},
      {"objectives", r.objectives ? objectives_json(*r.objectives) : Json(nullptr)},
      {"objectives_true", objectives_json(r.objectives_true)},
      {"forces",
       {{"contact_wrench", vec_json(r.contact_wrench)},
        {"robot_wrench", vec_json(r.robot_wrench)},
        {"tool_axial", r.tool_axial_force},
        {"discrepancy", r.discrepancy}}},
      {"attached", r.attached},
      {"pin_pulled", r.pin_pulled},
      {"visible_markers", visible},
      {"tip_in_view", r.tip_in_view},
      {"fittings", r.fittings},
      {"rolled_distance", r.rolled_distance},
  };
}

Json end_row(const std::string& status, long ticks, std::optional<long> violation_tick) {
  Json j = {{"type", "end"}, {"status", status}, {"ticks", ticks}};
  j["violation_tick"] = violation_tick ? Json(*violation_tick) : Json(nullptr);
  return j;
}

bool camera_within_bounds(const Json& header, const Json& camera, double tol) {
  const Json& b = header.at("bounds");
  const Vec3 p = vec3_of(camera.at("position"));
  const Vec3 lo = vec3_of(b.at("pos_lo")), hi = vec3_of(b.at("pos_hi"));
  for (int i = 0; i < 3; ++i) {
    if (!(p[i] >= lo[i] - tol && p[i] <= hi[i] + tol)) return false;
  }
  const double tx = camera.at("theta_x").get<double>(), ty = camera.at("theta_y").get<double>();
  return tx >= b.at("theta_x").at(0).get<double>() - tol && tx <= b.at("theta_x").at(1).get<double>() + tol &&
         ty >= b.at("theta_y").at(0).get<double>() - tol && ty <= b.at("theta_y").at(1).get<double>() + tol;
}

bool camera_step_within_caps(const Json& header, const Json& prev, const Json& next, double dt) {
  constexpr double kRel = 1e-9;
  const Json& caps = header.at("caps");
  const double dp = (vec3_of(next.at("position")) - vec3_of(prev.at("position"))).norm();
  const double dtx = next.at("theta_x").get<double>() - prev.at("theta_x").get<double>();
  const double dty = next.at("theta_y").get<double>() - prev.at("theta_y").get<double>();
  return dp <= caps.at("v_lin_max").get<double>() * dt * (1.0 + kRel) &&
         std::hypot(dtx, dty) <= caps.at("v_ang_max").get<double>() * dt * (1.0 + kRel);
}

void Summarizer::header(const Json& row) {
  if (row.at("type") != "header") throw std::invalid_argument("first row is not a header");
  if (row.at("format") != kLogFormat) throw std::invalid_argument("unsupported log format");
  header_ = row;
  s_ = MetricsSummary{};
  s_.scenario = row.at("scenario").get<std::string>();
  s_.seed = row.at("seed").get<std::uint64_t>();
  s_.duration = row.at("duration").get<double>();
}

bool Summarizer::tick(const Json& row) {
  if (header_.is_null()) throw std::invalid_argument("tick row before header");
  const long tick = row.at("tick").get<long>();
  const double time = row.at("time").get<double>();
  if (last_tick_ && tick != *last_tick_ + 1) throw std::invalid_argument("tick rows out of order");
  if (last_time_ && !(time > *last_time_)) throw std::invalid_argument("tick times not increasing");

  const Json& camera = row.at("camera_decision");
  bool ok = camera_within_bounds(header_, camera);
  if (last_camera_ && !camera_step_within_caps(header_, *last_camera_, camera, time - *last_time_)) ok = false;
  if (!ok) {
    ++s_.constraint_violations;
    if (!s_.first_violation_tick) s_.first_violation_tick = tick;
  }

  const std::string mode = row.at("mode").get<std::string>();
  ++s_.mode_ticks[mode];
  if (!last_mode_ || *last_mode_ != mode) {
    if (last_mode_) ++s_.transitions[*last_mode_ + "->" + mode];
    s_.mode_entries.emplace_back(time, mode);
  }
  const bool natural = mode.rfind("Natural", 0) == 0;
  const bool tracking = mode == "NaturalTracking";
  if (natural) ++s_.natural_ticks;
  if (tracking) {
    ++s_.tracking_ticks;
    const Pose truth = pose_of(row.at("tool_true"));
    const Json& est = row.at("tool_estimate");
    if (!est.is_null()) {
      const Pose e = pose_of(est);
      const double ep = (e.position - truth.position).norm();
      const double er = (e.rotation.inverse() * truth.rotation).log().norm();
      PoseErrorStats& pe = s_.pose_error;
      ++pe.samples;
      err_pos_sum_ += ep;
      err_rot_sum_ += er;
      pe.position_max = std::max(pe.position_max, ep);
      pe.rotation_max = std::max(pe.rotation_max, er);
    }
    const Json& obj = row.at("objectives_true");
    phi1_sum_ += obj.at("phi1").get<double>();
    phi2_sum_ += obj.at("phi2").get<double>();
    dist_sum_ += (vec3_of(camera.at("position")) - truth.position).norm();
  }

  const bool beep = row.at("beep").get<bool>();
  if (beep && !last_beep_) ++s_.beep_count;
  if (row.at("input_error").get<bool>()) ++s_.input_errors;
  if (row.at("published").get<bool>()) {
    if (last_publication_) {
      const double gap = time - *last_publication_;
      s_.publish_spacing_min = s_.publications > 1 ? std::min(s_.publish_spacing_min, gap) : gap;
      s_.publish_spacing_max = std::max(s_.publish_spacing_max, gap);
    }
    ++s_.publications;
    last_publication_ = time;
  }
  s_.fittings = row.at("fittings").get<int>();
  s_.rolled_distance = row.at("rolled_distance").get<double>();

  ++ticks_;
  last_tick_ = tick;
  last_time_ = time;
  last_camera_ = camera;
  last_mode_ = mode;
  last_beep_ = beep;
  return ok;
}

void Summarizer::end(const Json& row) {
  if (row.at("ticks").get<long>() != ticks_) throw std::invalid_argument("end row tick count mismatch");
  s_.status = row.at("status").get<std::string>();
  ended_ = true;
}

MetricsSummary Summarizer::summary() const {
  MetricsSummary out = s_;
  out.ticks = ticks_;
  out.tracking_uptime =
      out.natural_ticks > 0 ? static_cast<double>(out.tracking_ticks) / static_cast<double>(out.natural_ticks) : 0.0;
  if (out.pose_error.samples > 0) {
    out.pose_error.position_mean = err_pos_sum_ / static_cast<double>(out.pose_error.samples);
    out.pose_error.rotation_mean = err_rot_sum_ / static_cast<double>(out.pose_error.samples);
  }
  if (out.tracking_ticks > 0) {
    const double n = static_cast<double>(out.tracking_ticks);
    out.mean_phi1 = phi1_sum_ / n;
    out.mean_phi2 = phi2_sum_ / n;
    out.mean_camera_tool_distance = dist_sum_ / n;
  }
  if (!header_.is_null()) {
    const Json& g = header_.at("goals");
    out.goal_fittings = out.fittings >= g.at("min_fittings").get<int>();
    out.goal_rolled = out.rolled_distance >= g.at("min_rolled_distance").get<double>();
    out.goal_modes = true;
    for (const auto& m : g.at("require_modes")) {
      if (!out.mode_ticks.count(m.get<std::string>())) out.goal_modes = false;
    }
  }
  out.completed = out.goal_fittings && out.goal_rolled && out.goal_modes && out.status == "ok" &&
                  out.constraint_violations == 0;
  return out;
}

Json MetricsSummary::to_json() const {
  Json entries = Json::array();
  for (const auto& [t, m] : mode_entries) entries.push_back({{"time", t}, {"mode", m}});
  return {
      {"scenario", scenario},
      {"seed", seed},
      {"ticks", ticks},
      {"duration", duration},
      {"status", status},
      {"tracking_uptime", tracking_uptime},
      {"natural_ticks", natural_ticks},
      {"tracking_ticks", tracking_ticks},
      {"pose_error",
       {{"samples", pose_error.samples},
        {"position_mean", pose_error.position_mean},
        {"position_max", pose_error.position_max},
        {"rotation_mean", pose_error.rotation_mean},
        {"rotation_max", pose_error.rotation_max}}},
      {"constraint_violations", constraint_violations},
      {"first_violation_tick", first_violation_tick ? Json(*first_violation_tick) : Json(nullptr)},
      {"mode_ticks", mode_ticks},
      {"transitions", transitions},
      {"mode_entries", entries},
      {"beep_count", beep_count},
      {"input_errors", input_errors},
      {"publications", publications},
      {"publish_spacing", {{"min", publish_spacing_min}, {"max", publish_spacing_max}}},
      {"mean_phi1", mean_phi1},
      {"mean_phi2", mean_phi2},
      {"mean_camera_tool_distance", mean_camera_tool_distance},
      {"fittings", fittings},
      {"rolled_distance", rolled_distance},
      {"goals", {{"fittings", goal_fittings}, {"rolled_distance", goal_rolled}, {"modes", goal_modes}}},
      {"completed", completed},
  };
}

std::string dump_summary(const MetricsSummary& summary) { return summary.to_json().dump(2) + "\n"; }

RunOutcome run_to_log(const Scenario& scenario, std::ostream& log) {
  Session session(scenario);
  Summarizer sum;
  // Rows go through their text form so run and replay fold identical values.
  auto emit = [&](const Json& row) {
    const std::string line = row.dump();
    log << line << '\n';
    return Json::parse(line);
  };
  sum.header(emit(header_row(scenario)));
  RunOutcome out;
  while (!session.done()) {
    const TickRecord rec = session.advance();
    if (!sum.tick(emit(tick_row(rec)))) {
      out.violated = true;
      break;
    }
  }
  const MetricsSummary partial = sum.summary();
  sum.end(emit(end_row(out.violated ? "invariant_violation" : "ok", sum.ticks_seen(), partial.first_violation_tick)));
  out.summary = sum.summary();
  return out;
}

MetricsSummary replay_log(std::istream& in) {
  Summarizer sum;
  std::string line;
  long line_no = 0;
  bool have_header = false;
  bool ended = false;
  auto fail = [&](const std::string& what) -> ReplayError {
    std::string msg = "line " + std::to_string(line_no) + ": " + what;
    if (sum.last_tick()) {
      msg += "; last valid tick " + std::to_string(*sum.last_tick());
    } else {
      msg += "; no valid tick";
    }
    return ReplayError(msg, sum.last_tick());
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (ended) throw fail("data after the end row");
    Json row;
    try {
      row = Json::parse(line);
    } catch (const Json::exception&) {
      throw fail("malformed row");
    }
    try {
      const std::string type = row.at("type").get<std::string>();
      if (!have_header) {
        sum.header(row);
        have_header = true;
      } else if (type == "tick") {
        sum.tick(row);
      } else if (type == "end") {
        sum.end(row);
        ended = true;
      } else {
        throw std::invalid_argument("unknown row type '" + type + "'");
      }
    } catch (const Json::exception& e) {
      throw fail(std::string("invalid row: ") + e.what());
    } catch (const std::invalid_argument& e) {
      throw fail(e.what());
    }
  }
  if (!have_header) throw fail("empty log");
  if (!ended) throw fail("log is truncated (no end row)");
  return sum.summary();
}

std::string summary_path_for(const std::string& log_path) {
  std::filesystem::path p(log_path);
  if (p.extension() == ".jsonl") p.replace_extension();
  return p.string() + ".summary.json";
}

}  // namespace vdi
