#include "vdi/viewpoint_optimizer.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace vdi {

namespace {

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw std::invalid_argument("optimizer." + field + ": " + what);
}

/// Camera optical axis and its partial derivatives w.r.t. the decision angles.
struct OpticalAxis {
  Vec3 axis;
  Vec3 d_theta_x;
  Vec3 d_theta_y;
};

OpticalAxis optical_axis(const OptimizerConfig& config, double theta_x, double theta_y) {
  const Mat3 base = (Rotation::rot_z(config.theta_z_fixed) * level_camera_frame()).matrix();
  const double sa = std::sin(theta_x), ca = std::cos(theta_x);
  const double sb = std::sin(theta_y), cb = std::cos(theta_y);
  // Rx(a) * Ry(b) * z and its partials
  const Vec3 local(sb, -sa * cb, ca * cb);
  const Vec3 local_da(0.0, -ca * cb, -sa * cb);
  const Vec3 local_db(cb, sa * sb, -ca * sb);
  return {base * local, base * local_da, base * local_db};
}

double objective_at(const OptimizerConfig& config, const Vec5& x, const Vec3& tool_pos) {
  return evaluate_terms(config, CameraDecision::from_vector(x), tool_pos).total;
}

Vec5 lower_bounds(const OptimizerConfig& c) {
  Vec5 lo;
  lo << c.pos_lo, c.theta_x_lo, c.theta_y_lo;
  return lo;
}

Vec5 upper_bounds(const OptimizerConfig& c) {
  Vec5 hi;
  hi << c.pos_hi, c.theta_x_hi, c.theta_y_hi;
  return hi;
}

Vec5 clamp_box(const Vec5& x, const Vec5& lo, const Vec5& hi) { return x.cwiseMax(lo).cwiseMin(hi); }

using Mat5 = Eigen::Matrix<double, 5, 5>;

Mat5 numeric_hessian(const OptimizerConfig& config, const Vec5& x, const Pose& tool) {
  constexpr double h = 1e-6;
  Mat5 hess;
  for (int i = 0; i < 5; ++i) {
    Vec5 xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    hess.col(i) = (gradient(config, CameraDecision::from_vector(xp), tool) -
                   gradient(config, CameraDecision::from_vector(xm), tool)) /
                  (2.0 * h);
  }
  return 0.5 * (hess + hess.transpose());
}

}  // namespace

void OptimizerConfig::validate() const {
  for (int i = 0; i < 3; ++i) {
    require(pos_lo[i] < pos_hi[i], "pos_lo/pos_hi", "lower bound must be below upper bound");
  }
  require(theta_x_lo <= theta_x_hi, "theta_x_lo/theta_x_hi", "lower bound above upper bound");
  require(theta_y_lo <= theta_y_hi, "theta_y_lo/theta_y_hi", "lower bound above upper bound");
  require(w1 >= 0.0, "w1", "must be non-negative");
  require(w2 >= 0.0, "w2", "must be non-negative");
  require(w3 >= 0.0, "w3", "must be non-negative");
  require(w4 >= 0.0, "w4", "must be non-negative");
  require(d > 0.0, "d", "must be positive");
  require(v_lin_max > 0.0, "v_lin_max", "must be positive");
  require(v_ang_max > 0.0, "v_ang_max", "must be positive");
  require(max_iterations > 0, "max_iterations", "must be positive");
  require(step_tolerance > 0.0, "step_tolerance", "must be positive");
}

Rotation OptimizerConfig::neutral_rotation() const {
  return camera_rotation(*this, theta_x_neutral, theta_y_neutral);
}

Vec5 CameraDecision::as_vector() const {
  Vec5 v;
  v << position, theta_x, theta_y;
  return v;
}

CameraDecision CameraDecision::from_vector(const Vec5& v) {
  return CameraDecision{v.head<3>(), v[3], v[4]};
}

CameraDecision CameraDecision::neutral(const OptimizerConfig& config) {
  return CameraDecision{config.p_n, config.theta_x_neutral, config.theta_y_neutral};
}

Rotation level_camera_frame() {
  Mat3 m;
  m.col(0) = Vec3(-1.0, 0.0, 0.0);
  m.col(1) = Vec3(0.0, 0.0, -1.0);
  m.col(2) = Vec3(0.0, -1.0, 0.0);
  return Rotation(m);
}

Rotation camera_rotation(const OptimizerConfig& config, double theta_x, double theta_y) {
  return Rotation::rot_z(config.theta_z_fixed) * level_camera_frame() * Rotation::rot_x(theta_x) *
         Rotation::rot_y(theta_y);
}

Pose camera_pose(const OptimizerConfig& config, const CameraDecision& decision) {
  return Pose{decision.position, camera_rotation(config, decision.theta_x, decision.theta_y)};
}

double decision_theta_y(const OptimizerConfig& config, const Rotation& camera) {
  const Mat3 m = ((Rotation::rot_z(config.theta_z_fixed) * level_camera_frame()).inverse() * camera)
                     .matrix();
  return std::atan2(m(0, 2), m(0, 0));
}

double objective_distance(const Pose& camera, const Vec3& tool_pos, double d) {
  const double depth = (camera.rotation.inverse() * (tool_pos - camera.position)).z();
  return (depth - d) * (depth - d);
}

double objective_centering(const Pose& camera, const Vec3& tool_pos) {
  const Vec3 offset = tool_pos - camera.position;
  const double n = offset.norm();
  if (!(n > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  const double s = (offset / n).dot(camera.rotation * Vec3::UnitZ());
  return (s - 1.0) * (s - 1.0);
}

double objective_neutral_position(const Vec3& camera_pos, const Vec3& p_n) {
  return (camera_pos - p_n).squaredNorm();
}

double objective_neutral_rotation(const Pose& camera, const OptimizerConfig& config) {
  const double dy = decision_theta_y(config, camera.rotation) - config.theta_y_neutral;
  return dy * dy;
}

ObjectiveTerms evaluate_terms(const OptimizerConfig& config, const CameraDecision& decision,
                              const Vec3& tool_pos) {
  const Vec3 axis = optical_axis(config, decision.theta_x, decision.theta_y).axis;
  const Vec3 r = tool_pos - decision.position;
  const double depth = axis.dot(r);
  const double n = r.norm();

  ObjectiveTerms t;
  t.phi1 = (depth - config.d) * (depth - config.d);
  if (n > 0.0) {
    const double s = depth / n;
    t.phi2 = (s - 1.0) * (s - 1.0);
  } else {
    t.phi2 = std::numeric_limits<double>::quiet_NaN();
  }
  t.phi3 = (decision.position - config.p_n).squaredNorm();
  const double dy = decision.theta_y - config.theta_y_neutral;
  t.phi4 = dy * dy;
  t.total = config.w1 * t.phi1 + config.w2 * t.phi2 + config.w3 * t.phi3 + config.w4 * t.phi4;
  return t;
}

double total_objective(const OptimizerConfig& config, const CameraDecision& decision,
                       const Pose& tool) {
  return evaluate_terms(config, decision, tool.position).total;
}

Vec5 gradient(const OptimizerConfig& config, const CameraDecision& decision, const Pose& tool) {
  const OpticalAxis ax = optical_axis(config, decision.theta_x, decision.theta_y);
  const Vec3 r = tool.position - decision.position;
  const double n = r.norm();
  const double e1 = ax.axis.dot(r) - config.d;

  Vec5 g = Vec5::Zero();
  // distance term
  g.head<3>() += config.w1 * (-2.0 * e1) * ax.axis;
  g[3] += config.w1 * 2.0 * e1 * ax.d_theta_x.dot(r);
  g[4] += config.w1 * 2.0 * e1 * ax.d_theta_y.dot(r);
  // centering term
  if (n > 0.0) {
    const Vec3 u = r / n;
    const double s = u.dot(ax.axis);
    const double e2 = 2.0 * (s - 1.0);
    g.head<3>() += config.w2 * e2 * (-(ax.axis - s * u) / n);
    g[3] += config.w2 * e2 * u.dot(ax.d_theta_x);
    g[4] += config.w2 * e2 * u.dot(ax.d_theta_y);
  }
  // neutral position and y-rotation
  g.head<3>() += config.w3 * 2.0 * (decision.position - config.p_n);
  g[4] += config.w4 * 2.0 * (decision.theta_y - config.theta_y_neutral);
  return g;
}

CameraDecision project(const OptimizerConfig& config, const CameraDecision& decision) {
  return CameraDecision::from_vector(
      clamp_box(decision.as_vector(), lower_bounds(config), upper_bounds(config)));
}

bool within_bounds(const OptimizerConfig& config, const CameraDecision& decision, double tolerance) {
  const Vec5 x = decision.as_vector();
  const Vec5 lo = lower_bounds(config), hi = upper_bounds(config);
  for (int i = 0; i < 5; ++i) {
    if (!(x[i] >= lo[i] - tolerance && x[i] <= hi[i] + tolerance)) return false;
  }
  return true;
}

SolveResult solve(const OptimizerConfig& config, const CameraDecision& current, const Pose& tool) {
  constexpr double kArmijo = 1e-4;
  constexpr int kMaxHalvings = 40;

  const Vec5 lo = lower_bounds(config), hi = upper_bounds(config);
  SolveResult result;
  result.decision = current;

  Vec5 x = current.as_vector();
  double f = objective_at(config, x, tool.position);
  result.objective = f;
  if (!std::isfinite(f) || !tool.position.allFinite()) {
    result.rejected = true;
    return result;
  }

  // Tries x(alpha) = P(x + alpha * dir); returns true on sufficient decrease.
  auto line_search = [&](const Vec5& g, const Vec5& dir, Vec5& x_new, double& f_new) {
    double alpha = 1.0;
    for (int k = 0; k < kMaxHalvings; ++k, alpha *= 0.5) {
      x_new = clamp_box(x + alpha * dir, lo, hi);
      const Vec5 step = x_new - x;
      if (step.norm() == 0.0) return false;
      f_new = objective_at(config, x_new, tool.position);
      if (std::isfinite(f_new) && f_new <= f + kArmijo * g.dot(step) && f_new < f) return true;
    }
    return false;
  };

  for (int it = 0; it < config.max_iterations; ++it) {
    result.iterations = it + 1;
    const Vec5 g = gradient(config, CameraDecision::from_vector(x), tool);
    const Vec5 pg_step = clamp_box(x - g, lo, hi) - x;
    if (pg_step.norm() < 1e-12) {
      result.converged = true;
      break;
    }

    // Variables pinned at a bound with the gradient pushing outward are held fixed.
    const double eps = std::min(1e-6, pg_step.norm());
    std::array<bool, 5> free{};
    int n_free = 0;
    for (int i = 0; i < 5; ++i) {
      const bool at_lo = x[i] <= lo[i] + eps && g[i] > 0.0;
      const bool at_hi = x[i] >= hi[i] - eps && g[i] < 0.0;
      free[i] = !(at_lo || at_hi);
      n_free += free[i] ? 1 : 0;
    }

    Vec5 dir = -g;
    if (n_free > 0) {
      const Mat5 hess = numeric_hessian(config, x, tool);
      Eigen::MatrixXd h_ff(n_free, n_free);
      Eigen::VectorXd g_f(n_free);
      for (int i = 0, a = 0; i < 5; ++i) {
        if (!free[i]) continue;
        g_f[a] = g[i];
        for (int j = 0, b = 0; j < 5; ++j) {
          if (!free[j]) continue;
          h_ff(a, b++) = hess(i, j);
        }
        ++a;
      }
      // Eigenvalue modification keeps the direction a descent direction near saddles.
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h_ff);
      const Eigen::VectorXd lambda = eig.eigenvalues().cwiseAbs();
      const double floor = 1e-8 * std::max(1.0, lambda.maxCoeff());
      const Eigen::VectorXd inv = lambda.cwiseMax(floor).cwiseInverse();
      const Eigen::VectorXd d_f =
          -(eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose()) * g_f;
      for (int i = 0, a = 0; i < 5; ++i) {
        if (free[i]) dir[i] = d_f[a++];
      }
    }

    Vec5 x_new;
    double f_new = f;
    bool accepted = line_search(g, dir, x_new, f_new);
    if (!accepted) {
      // scaled projected gradient fallback
      const double scale = 1.0 / std::max(1.0, g.cwiseAbs().maxCoeff());
      accepted = line_search(g, -scale * g, x_new, f_new);
    }
    if (!accepted) {
      result.converged = true;
      break;
    }

    const double step_norm = (x_new - x).norm();
    x = x_new;
    f = f_new;
    if (step_norm < config.step_tolerance) {
      result.converged = true;
      break;
    }
  }

  result.decision = CameraDecision::from_vector(x);
  result.objective = f;
  return result;
}

CameraDecision limit_velocity(const CameraDecision& prev, const CameraDecision& next, double dt,
                              const OptimizerConfig& config) {
  CameraDecision out = next;

  const Vec3 dp = next.position - prev.position;
  const double max_lin = config.v_lin_max * dt;
  if (dp.norm() > max_lin) out.position = prev.position + dp * (max_lin / dp.norm());

  const Eigen::Vector2d dtheta(next.theta_x - prev.theta_x, next.theta_y - prev.theta_y);
  const double max_ang = config.v_ang_max * dt;
  if (dtheta.norm() > max_ang) {
    const Eigen::Vector2d step = dtheta * (max_ang / dtheta.norm());
    out.theta_x = prev.theta_x + step.x();
    out.theta_y = prev.theta_y + step.y();
  }
  return project(config, out);
}

}  // namespace vdi
