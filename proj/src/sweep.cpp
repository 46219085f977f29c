#include "vdi/sweep.hpp"

#include <charconv>
#include <sstream>
#include <stdexcept>

namespace vdi {

namespace {

// Stream that discards everything; keeps run_summary on the exact code path of a logged run.
class NullBuffer : public std::streambuf {
 protected:
  int overflow(int c) override { return c; }
  std::streamsize xsputn(const char*, std::streamsize n) override { return n; }
};

std::string num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::vector<WeightPoint> WeightGrid::expand(const OptimizerConfig& base) const {
  auto axis = [](const std::vector<double>& v, double fallback) {
    return v.empty() ? std::vector<double>{fallback} : v;
  };
  const auto a1 = axis(w1, base.w1), a2 = axis(w2, base.w2), a3 = axis(w3, base.w3), a4 = axis(w4, base.w4),
             ad = axis(d, base.d);
  std::vector<WeightPoint> out;
  out.reserve(a1.size() * a2.size() * a3.size() * a4.size() * ad.size());
  for (double x1 : a1)
    for (double x2 : a2)
      for (double x3 : a3)
        for (double x4 : a4)
          for (double xd : ad) out.push_back({x1, x2, x3, x4, xd});
  return out;
}

std::vector<double> parse_axis(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    double v = 0.0;
    const char* b = item.data();
    const char* e = b + item.size();
    while (b < e && *b == ' ') ++b;
    const auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc() || res.ptr != e) throw std::invalid_argument("not a number: '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("empty list");
  return out;
}

Scenario with_weights(const Scenario& scenario, const WeightPoint& p) {
  Scenario s = scenario;
  s.optimizer.w1 = p.w1;
  s.optimizer.w2 = p.w2;
  s.optimizer.w3 = p.w3;
  s.optimizer.w4 = p.w4;
  s.optimizer.d = p.d;
  return s;
}

MetricsSummary run_summary(const Scenario& scenario) {
  NullBuffer buf;
  std::ostream sink(&buf);
  return run_to_log(scenario, sink).summary;
}

std::vector<MetricsSummary> sweep(const Scenario& scenario, const std::vector<WeightPoint>& points) {
  for (const auto& p : points) with_weights(scenario, p).validate();
  std::vector<MetricsSummary> out(points.size());
  const long n = static_cast<long>(points.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < n; ++i) out[i] = run_summary(with_weights(scenario, points[i]));
  return out;
}

std::vector<MetricsSummary> sweep_serial(const Scenario& scenario, const std::vector<WeightPoint>& points) {
  std::vector<MetricsSummary> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(run_summary(with_weights(scenario, p)));
  return out;
}

std::string sweep_table(const std::vector<WeightPoint>& points, const std::vector<MetricsSummary>& summaries,
                        char delim) {
  if (points.size() != summaries.size()) throw std::invalid_argument("sweep_table: size mismatch");
  std::ostringstream os;
  const char* cols[] = {"w1", "w2", "w3", "w4", "d", "tracking_uptime", "mean_phi1", "mean_phi2",
                        "mean_camera_tool_distance", "pose_error_position_mean", "pose_error_rotation_mean",
                        "constraint_violations", "beep_count", "completed"};
  for (std::size_t i = 0; i < std::size(cols); ++i) os << (i ? std::string(1, delim) : "") << cols[i];
  os << '\n';
  for (std::size_t i = 0; i < points.size(); ++i) {
    const WeightPoint& p = points[i];
    const MetricsSummary& m = summaries[i];
    os << num(p.w1) << delim << num(p.w2) << delim << num(p.w3) << delim << num(p.w4) << delim << num(p.d) << delim
       << num(m.tracking_uptime) << delim << num(m.mean_phi1) << delim << num(m.mean_phi2) << delim
       << num(m.mean_camera_tool_distance) << delim << num(m.pose_error.position_mean) << delim
       << num(m.pose_error.rotation_mean) << delim << m.constraint_violations << delim << m.beep_count << delim
       << (m.completed ? 1 : 0) << '\n';
  }
  return os.str();
}

}  // namespace vdi
