#include "geometry.hpp"

#include <cmath>

#include "errors.hpp"

namespace contpose {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Flip sign so the first nonzero component of (w, x, y, z) is positive.
void canonicalize(double& w, double& x, double& y, double& z) {
  double lead = w;
  if (lead == 0.0) lead = x;
  if (lead == 0.0) lead = y;
  if (lead == 0.0) lead = z;
  if (lead < 0.0) {
    w = -w;
    x = -x;
    y = -y;
    z = -z;
  }
}

}  // namespace

UnitQuaternion::UnitQuaternion(double w, double x, double y, double z) {
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  if (n < 1e-12) throw DegenerateAxis("quaternion norm is near zero");
  w_ = w / n;
  x_ = x / n;
  y_ = y / n;
  z_ = z / n;
  canonicalize(w_, x_, y_, z_);
}

UnitQuaternion UnitQuaternion::from_axis_angle(const Eigen::Vector3d& axis,
                                               double angle) {
  const double n = axis.norm();
  if (n < 1e-12) {
    if (angle == 0.0) return identity();
    throw DegenerateAxis("rotation axis is near zero");
  }
  const double h = 0.5 * angle;
  const double s = std::sin(h) / n;
  return {std::cos(h), s * axis.x(), s * axis.y(), s * axis.z()};
}

UnitQuaternion UnitQuaternion::from_rotation_vector(const Eigen::Vector3d& rv) {
  const double n = rv.norm();
  if (n < 1e-12) {
    // First-order expansion; exact at rv = 0 and smooth through it.
    UnitQuaternion q;
    q.w_ = 1.0;
    q.x_ = 0.5 * rv.x();
    q.y_ = 0.5 * rv.y();
    q.z_ = 0.5 * rv.z();
    const double inv =
        1.0 / std::sqrt(q.w_ * q.w_ + q.x_ * q.x_ + q.y_ * q.y_ + q.z_ * q.z_);
    q.w_ *= inv;
    q.x_ *= inv;
    q.y_ *= inv;
    q.z_ *= inv;
    return q;
  }
  return from_axis_angle(rv, n);
}

UnitQuaternion UnitQuaternion::from_matrix(const Eigen::Matrix3d& R) {
  // Shepperd's method: pick the largest diagonal combination for stability.
  const double tr = R.trace();
  double w, x, y, z;
  if (tr > 0.0) {
    double s = std::sqrt(tr + 1.0) * 2.0;
    w = 0.25 * s;
    x = (R(2, 1) - R(1, 2)) / s;
    y = (R(0, 2) - R(2, 0)) / s;
    z = (R(1, 0) - R(0, 1)) / s;
  } else if (R(0, 0) > R(1, 1) && R(0, 0) > R(2, 2)) {
    double s = std::sqrt(1.0 + R(0, 0) - R(1, 1) - R(2, 2)) * 2.0;
    w = (R(2, 1) - R(1, 2)) / s;
    x = 0.25 * s;
    y = (R(0, 1) + R(1, 0)) / s;
    z = (R(0, 2) + R(2, 0)) / s;
  } else if (R(1, 1) > R(2, 2)) {
    double s = std::sqrt(1.0 + R(1, 1) - R(0, 0) - R(2, 2)) * 2.0;
    w = (R(0, 2) - R(2, 0)) / s;
    x = (R(0, 1) + R(1, 0)) / s;
    y = 0.25 * s;
    z = (R(1, 2) + R(2, 1)) / s;
  } else {
    double s = std::sqrt(1.0 + R(2, 2) - R(0, 0) - R(1, 1)) * 2.0;
    w = (R(1, 0) - R(0, 1)) / s;
    x = (R(0, 2) + R(2, 0)) / s;
    y = (R(1, 2) + R(2, 1)) / s;
    z = 0.25 * s;
  }
  return {w, x, y, z};
}

UnitQuaternion UnitQuaternion::operator*(const UnitQuaternion& rhs) const {
  const auto p = qops::mul(raw(), rhs.raw());
  return {p.w, p.x, p.y, p.z};
}

UnitQuaternion UnitQuaternion::inverse() const {
  // Conjugate of a unit quaternion; canonical w stays nonnegative.
  return {w_, -x_, -y_, -z_};
}

Eigen::Vector3d UnitQuaternion::rotate(const Eigen::Vector3d& v) const {
  const auto r = qops::rotate(raw(), qops::Vec3T<double>{v.x(), v.y(), v.z()});
  return {r.x, r.y, r.z};
}

Eigen::Matrix3d UnitQuaternion::to_matrix() const {
  Eigen::Matrix3d R;
  const double xx = x_ * x_, yy = y_ * y_, zz = z_ * z_;
  const double xy = x_ * y_, xz = x_ * z_, yz = y_ * z_;
  const double wx = w_ * x_, wy = w_ * y_, wz = w_ * z_;
  R << 1 - 2 * (yy + zz), 2 * (xy - wz), 2 * (xz + wy),  //
      2 * (xy + wz), 1 - 2 * (xx + zz), 2 * (yz - wx),   //
      2 * (xz - wy), 2 * (yz + wx), 1 - 2 * (xx + yy);
  return R;
}

Eigen::Vector3d UnitQuaternion::to_rotation_vector() const {
  const Eigen::Vector3d v(x_, y_, z_);
  const double n = v.norm();
  if (n < 1e-12) return 2.0 * v;  // small-angle: angle/sin(angle/2) -> 2
  const double angle = 2.0 * std::atan2(n, w_);
  return (angle / n) * v;
}

double geodesic_angle(const UnitQuaternion& a, const UnitQuaternion& b) {
  // atan2 on the relative rotation stays accurate near 0, where the naive
  // 2 acos(|a . b|) cannot resolve angles below ~1e-8.
  const auto r = qops::mul(qops::conjugate(a.raw()), b.raw());
  const double vn = std::sqrt(r.x * r.x + r.y * r.y + r.z * r.z);
  return 2.0 * std::atan2(vn, std::abs(r.w));
}

UnitQuaternion slerp(const UnitQuaternion& a, const UnitQuaternion& b,
                     double u) {
  auto qa = a.raw();
  auto qb = b.raw();
  double d = qops::dot(qa, qb);
  if (d < 0.0) {  // same rotation, opposite sign: take the short arc
    qb = {-qb.w, -qb.x, -qb.y, -qb.z};
    d = -d;
  }
  if (d > 1.0 - 1e-10) {
    // Nearly identical; slerp weights degenerate to linear ones.
    return {qa.w + u * (qb.w - qa.w), qa.x + u * (qb.x - qa.x),
            qa.y + u * (qb.y - qa.y), qa.z + u * (qb.z - qa.z)};
  }
  const double omega = std::acos(std::min(1.0, d));
  const double so = std::sin(omega);
  const double ca = std::sin((1.0 - u) * omega) / so;
  const double cb = std::sin(u * omega) / so;
  return {ca * qa.w + cb * qb.w, ca * qa.x + cb * qb.x, ca * qa.y + cb * qb.y,
          ca * qa.z + cb * qb.z};
}

EulerAngles to_euler_zyx(const UnitQuaternion& q) {
  EulerAngles e;
  const double sp = std::clamp(2.0 * (q.w() * q.y() - q.x() * q.z()), -1.0, 1.0);
  e.pitch = std::asin(sp);
  if (std::abs(e.pitch) > kPi / 2 - 1e-6) {
    // Roll and yaw axes coincide; report roll = 0 and recover yaw from the
    // matrix elements that stay well conditioned here.
    e.gimbal_lock = true;
    e.roll = 0.0;
    const double r01 = 2.0 * (q.x() * q.y() - q.w() * q.z());
    const double r11 = 1.0 - 2.0 * (q.x() * q.x() + q.z() * q.z());
    e.yaw = wrap_angle(std::atan2(-r01, r11));
    return e;
  }
  double roll, pitch, yaw;
  qops::to_euler_zyx<double>(
      q.raw(), roll, pitch, yaw,
      [](double v) { return std::asin(std::clamp(v, -1.0, 1.0)); },
      [](double y, double x) { return std::atan2(y, x); });
  e.roll = wrap_angle(roll);
  e.pitch = pitch;
  e.yaw = wrap_angle(yaw);
  return e;
}

UnitQuaternion from_euler_zyx(double roll, double pitch, double yaw) {
  const auto qz = UnitQuaternion::from_axis_angle({0, 0, 1}, yaw);
  const auto qy = UnitQuaternion::from_axis_angle({0, 1, 0}, pitch);
  const auto qx = UnitQuaternion::from_axis_angle({1, 0, 0}, roll);
  return qz * qy * qx;
}

RigidTransform3 RigidTransform3::operator*(const RigidTransform3& rhs) const {
  return {rotation * rhs.rotation,
          rotation.rotate(rhs.translation) + translation};
}

RigidTransform3 RigidTransform3::inverse() const {
  const UnitQuaternion rinv = rotation.inverse();
  return {rinv, -rinv.rotate(translation)};
}

Eigen::Vector3d RigidTransform3::apply(const Eigen::Vector3d& p) const {
  return rotation.rotate(p) + translation;
}

Eigen::Matrix4d RigidTransform3::to_matrix() const {
  Eigen::Matrix4d M = Eigen::Matrix4d::Identity();
  M.topLeftCorner<3, 3>() = rotation.to_matrix();
  M.topRightCorner<3, 1>() = translation;
  return M;
}

RigidTransform2 RigidTransform2::operator*(const RigidTransform2& rhs) const {
  const double c = std::cos(angle), s = std::sin(angle);
  Eigen::Vector2d rt(c * rhs.translation.x() - s * rhs.translation.y(),
                     s * rhs.translation.x() + c * rhs.translation.y());
  return {wrap_angle(angle + rhs.angle), rt + translation};
}

RigidTransform2 RigidTransform2::inverse() const {
  const double c = std::cos(angle), s = std::sin(angle);
  // R(-a) * (-t)
  Eigen::Vector2d ti(-(c * translation.x() + s * translation.y()),
                     -(-s * translation.x() + c * translation.y()));
  return {wrap_angle(-angle), ti};
}

Eigen::Vector2d RigidTransform2::apply(const Eigen::Vector2d& p) const {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * p.x() - s * p.y() + translation.x(),
          s * p.x() + c * p.y() + translation.y()};
}

Eigen::Matrix3d RigidTransform2::to_matrix() const {
  const double c = std::cos(angle), s = std::sin(angle);
  Eigen::Matrix3d M = Eigen::Matrix3d::Identity();
  M(0, 0) = c;
  M(0, 1) = -s;
  M(1, 0) = s;
  M(1, 1) = c;
  M(0, 2) = translation.x();
  M(1, 2) = translation.y();
  return M;
}

double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  if (a > kPi) a -= 2.0 * kPi;
  return a;
}

}  // namespace contpose
