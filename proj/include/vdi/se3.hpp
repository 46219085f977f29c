#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace vdi {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

/**
 * Element of SO(3), stored as a unit quaternion.
 *
 * Every constructor and operator re-normalizes (input that is already unit to
 * within a few ulp is kept as is), so a Rotation that has been composed many
 * times in the control loop stays on the manifold.
 */
class Rotation {
 public:
  Rotation() : q_(Eigen::Quaterniond::Identity()) {}
  explicit Rotation(const Eigen::Quaterniond& q);
  explicit Rotation(const Mat3& m);

  static Rotation identity() { return Rotation(); }
  static Rotation from_axis_angle(const Vec3& axis, double angle);
  /// Exponential map of a rotation vector (axis * angle).
  static Rotation exp(const Vec3& rotvec);
  static Rotation rot_x(double angle);
  static Rotation rot_y(double angle);
  static Rotation rot_z(double angle);
  /// Fixed-axis roll/pitch/yaw: Rz(yaw) * Ry(pitch) * Rx(roll).
  static Rotation from_rpy(double roll, double pitch, double yaw);

  /// Rotation vector with norm in [0, pi].
  Vec3 log() const;

  const Eigen::Quaterniond& quaternion() const { return q_; }
  Mat3 matrix() const { return q_.toRotationMatrix(); }
  Rotation inverse() const { return Rotation(q_.conjugate()); }
  Vec3 operator*(const Vec3& v) const { return q_ * v; }
  Rotation operator*(const Rotation& other) const { return Rotation(q_ * other.q_); }

 private:
  Eigen::Quaterniond q_;
};

/// Angle of the axis-angle decomposition, in [0, pi].
double rotation_angle(const Rotation& r);

/// Rigid transform. Maps points from the child frame into the parent frame.
struct Pose {
  Vec3 position = Vec3::Zero();
  Rotation rotation;

  static Pose identity() { return Pose{}; }
  static Pose from_translation(const Vec3& t) { return Pose{t, Rotation()}; }

  Vec3 apply(const Vec3& point) const { return rotation * point + position; }
};

Pose compose(const Pose& a, const Pose& b);
Pose invert(const Pose& p);

inline Pose operator*(const Pose& a, const Pose& b) { return compose(a, b); }

}  // namespace vdi
