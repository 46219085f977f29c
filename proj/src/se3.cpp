#include "vdi/se3.hpp"

#include <cmath>
#include <limits>

namespace vdi {

namespace {

// Already-unit input is kept bit for bit so serialized rotations read back unchanged.
Eigen::Quaterniond canonical(Eigen::Quaterniond q) {
  if (std::abs(q.squaredNorm() - 1.0) > 4.0 * std::numeric_limits<double>::epsilon()) q.normalize();
  return q;
}

}  // namespace

Rotation::Rotation(const Eigen::Quaterniond& q) : q_(canonical(q)) {}

Rotation::Rotation(const Mat3& m) : q_(canonical(Eigen::Quaterniond(m))) {}

Rotation Rotation::from_axis_angle(const Vec3& axis, double angle) {
  return Rotation(Eigen::Quaterniond(Eigen::AngleAxisd(angle, axis.normalized())));
}

Rotation Rotation::exp(const Vec3& rotvec) {
  const double theta = rotvec.norm();
  if (theta < 1e-12) {
    // first-order expansion; normalization absorbs the second-order term
    return Rotation(Eigen::Quaterniond(1.0, 0.5 * rotvec.x(), 0.5 * rotvec.y(), 0.5 * rotvec.z()));
  }
  return from_axis_angle(rotvec / theta, theta);
}

Rotation Rotation::rot_x(double angle) { return from_axis_angle(Vec3::UnitX(), angle); }
Rotation Rotation::rot_y(double angle) { return from_axis_angle(Vec3::UnitY(), angle); }
Rotation Rotation::rot_z(double angle) { return from_axis_angle(Vec3::UnitZ(), angle); }

Rotation Rotation::from_rpy(double roll, double pitch, double yaw) {
  return rot_z(yaw) * rot_y(pitch) * rot_x(roll);
}

Vec3 Rotation::log() const {
  Eigen::Quaterniond q = q_;
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  const Vec3 v = q.vec();
  const double s = v.norm();
  if (s < 1e-12) return 2.0 * v;
  const double theta = 2.0 * std::atan2(s, q.w());
  return v * (theta / s);
}

double rotation_angle(const Rotation& r) {
  const Eigen::Quaterniond& q = r.quaternion();
  return 2.0 * std::atan2(q.vec().norm(), std::abs(q.w()));
}

Pose compose(const Pose& a, const Pose& b) {
  return Pose{a.rotation * b.position + a.position, a.rotation * b.rotation};
}

Pose invert(const Pose& p) {
  const Rotation rinv = p.rotation.inverse();
  return Pose{-(rinv * p.position), rinv};
}

}  // namespace vdi
