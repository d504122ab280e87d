#pragma once

#include <Eigen/Dense>

#include "quat_ops.hpp"

namespace contpose {

// Unit quaternion, Hamilton convention, scalar first. Canonical form keeps
// w >= 0 (sign ties broken on the first nonzero vector component) so that a
// rotation has exactly one representation and comparisons are meaningful.
class UnitQuaternion {
public:
  UnitQuaternion() : w_(1.0), x_(0.0), y_(0.0), z_(0.0) {}

  // Normalizes and canonicalizes. Throws DegenerateAxis on a near-zero norm.
  UnitQuaternion(double w, double x, double y, double z);

  static UnitQuaternion identity() { return {}; }

  // axis need not be unit length; |axis| below 1e-12 throws DegenerateAxis.
  static UnitQuaternion from_axis_angle(const Eigen::Vector3d& axis,
                                        double angle);

  // rv = axis * angle; zero vector maps to identity.
  static UnitQuaternion from_rotation_vector(const Eigen::Vector3d& rv);

  static UnitQuaternion from_matrix(const Eigen::Matrix3d& R);

  double w() const { return w_; }
  double x() const { return x_; }
  double y() const { return y_; }
  double z() const { return z_; }

  Eigen::Vector4d coeffs_wxyz() const { return {w_, x_, y_, z_}; }

  UnitQuaternion operator*(const UnitQuaternion& rhs) const;
  UnitQuaternion inverse() const;

  Eigen::Vector3d rotate(const Eigen::Vector3d& v) const;
  Eigen::Matrix3d to_matrix() const;

  // axis * angle with angle in [0, pi]; identity maps to the zero vector.
  Eigen::Vector3d to_rotation_vector() const;

  qops::QuatT<double> raw() const { return {w_, x_, y_, z_}; }

private:
  double w_, x_, y_, z_;
};

// Geodesic distance on SO(3) in radians, in [0, pi].
double geodesic_angle(const UnitQuaternion& a, const UnitQuaternion& b);

// Shortest-arc spherical interpolation, u in [0, 1]. Antipodal raw inputs
// encode the same rotation, so after sign alignment the arc is well defined
// for every input pair; near-parallel ends fall back to normalized lerp.
UnitQuaternion slerp(const UnitQuaternion& a, const UnitQuaternion& b,
                     double u);

// Intrinsic ZYX convention: R = Rz(yaw) * Ry(pitch) * Rx(roll).
// Angles lie in (-pi, pi], pitch in [-pi/2, pi/2]. gimbal_lock is set when
// |pitch| is within 1e-6 of pi/2, where roll and yaw are no longer separable
// (roll is then reported as 0 and yaw absorbs the remaining rotation).
struct EulerAngles {
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;
  bool gimbal_lock = false;
};

EulerAngles to_euler_zyx(const UnitQuaternion& q);
UnitQuaternion from_euler_zyx(double roll, double pitch, double yaw);

// Rigid transform in 3-D: p -> R p + t.
struct RigidTransform3 {
  UnitQuaternion rotation;
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static RigidTransform3 identity() { return {}; }

  RigidTransform3 operator*(const RigidTransform3& rhs) const;
  RigidTransform3 inverse() const;
  Eigen::Vector3d apply(const Eigen::Vector3d& p) const;
  Eigen::Matrix4d to_matrix() const;
};

// Rigid transform in the plane: p -> R(angle) p + t, angle in (-pi, pi].
struct RigidTransform2 {
  double angle = 0.0;
  Eigen::Vector2d translation = Eigen::Vector2d::Zero();

  static RigidTransform2 identity() { return {}; }

  RigidTransform2 operator*(const RigidTransform2& rhs) const;
  RigidTransform2 inverse() const;
  Eigen::Vector2d apply(const Eigen::Vector2d& p) const;
  Eigen::Matrix3d to_matrix() const;
};

// Wrap an angle to (-pi, pi].
double wrap_angle(double a);

}  // namespace contpose
