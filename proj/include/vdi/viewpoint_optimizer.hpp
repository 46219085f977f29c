#pragma once

#include "vdi/se3.hpp"

namespace vdi {

using Vec5 = Eigen::Matrix<double, 5, 1>;

/// Weights, targets, bounds and rate limits of the camera viewpoint problem.
struct OptimizerConfig {
  // objective weights: distance, centering, neutral position, neutral y-rotation
  double w1 = 100.0;
  double w2 = 100.0;
  double w3 = 2.0;
  double w4 = 0.5;

  double d = 0.3;  ///< desired viewing depth [m]
  Vec3 p_n{0.0, -0.4, 0.35};
  double theta_x_neutral = 0.0;
  double theta_y_neutral = 0.0;
  double theta_z_fixed = 0.0;

  Vec3 pos_lo{-0.3, -0.45, -0.2};
  Vec3 pos_hi{0.3, -0.25, 0.55};
  double theta_x_lo = -0.45;
  double theta_x_hi = 0.0;
  double theta_y_lo = -0.8;
  double theta_y_hi = 0.8;

  double v_lin_max = 0.01;  ///< [m/s]
  double v_ang_max = 0.1;   ///< [rad/s]

  int max_iterations = 200;
  double step_tolerance = 1e-7;

  /// Throws std::invalid_argument naming the first offending field.
  void validate() const;

  Rotation neutral_rotation() const;
};

/// Solver decision variables. The z-rotation is fixed by the config.
struct CameraDecision {
  Vec3 position = Vec3::Zero();
  double theta_x = 0.0;
  double theta_y = 0.0;

  Vec5 as_vector() const;
  static CameraDecision from_vector(const Vec5& v);
  static CameraDecision neutral(const OptimizerConfig& config);
};

/// Optical frame at zero decision angles: looks along world -y, image x along
/// world -x, image y pointing down.
Rotation level_camera_frame();

/// Camera orientation Rz(theta_z) * level * Rx(theta_x) * Ry(theta_y).
Rotation camera_rotation(const OptimizerConfig& config, double theta_x, double theta_y);
Pose camera_pose(const OptimizerConfig& config, const CameraDecision& decision);

/// Recovers theta_y from a camera rotation built by camera_rotation.
double decision_theta_y(const OptimizerConfig& config, const Rotation& camera);

// Individual objective terms (unweighted).
double objective_distance(const Pose& camera, const Vec3& tool_pos, double d);
/// Returns NaN when the tool coincides with the camera.
double objective_centering(const Pose& camera, const Vec3& tool_pos);
double objective_neutral_position(const Vec3& camera_pos, const Vec3& p_n);
/// Squared deviation of theta_y from neutral; rotation about the other axes is not penalized.
double objective_neutral_rotation(const Pose& camera, const OptimizerConfig& config);

struct ObjectiveTerms {
  double phi1 = 0.0;
  double phi2 = 0.0;
  double phi3 = 0.0;
  double phi4 = 0.0;
  double total = 0.0;
};

ObjectiveTerms evaluate_terms(const OptimizerConfig& config, const CameraDecision& decision,
                              const Vec3& tool_pos);
double total_objective(const OptimizerConfig& config, const CameraDecision& decision,
                       const Pose& tool);

/// Analytic gradient of total_objective w.r.t. (x, y, z, theta_x, theta_y).
Vec5 gradient(const OptimizerConfig& config, const CameraDecision& decision, const Pose& tool);

CameraDecision project(const OptimizerConfig& config, const CameraDecision& decision);
bool within_bounds(const OptimizerConfig& config, const CameraDecision& decision,
                   double tolerance = 1e-9);

struct SolveResult {
  CameraDecision decision;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  bool rejected = false;  ///< objective was not finite; decision is the warm start
};

/**
 * Local minimization of the weighted objective over the decision box,
 * warm-started at `current`.
 *
 * Projected Newton iterations with an Armijo backtracking search along the
 * projection arc; falls back to a projected gradient step when the Newton
 * direction does not descend. Only decreasing steps are accepted, so the
 * returned objective never exceeds the objective at `current`.
 */
SolveResult solve(const OptimizerConfig& config, const CameraDecision& current, const Pose& tool);

/// Clamps the step from `prev` to `next` to the configured linear and angular rates.
CameraDecision limit_velocity(const CameraDecision& prev, const CameraDecision& next, double dt,
                              const OptimizerConfig& config);

}  // namespace vdi
