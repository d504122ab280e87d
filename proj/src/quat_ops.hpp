#pragma once

#include <cmath>

namespace contpose::qops {

// Quaternion and 3-vector over a generic scalar so the same formulas serve
// plain doubles and tape variables. Hamilton convention, scalar first.
// Mixed double-scalar arithmetic is used throughout so both instantiations
// compile (tape variables have no construction from a double literal).
template <typename S>
struct QuatT {
  S w, x, y, z;
};

template <typename S>
struct Vec3T {
  S x, y, z;
};

template <typename S>
QuatT<S> mul(const QuatT<S>& a, const QuatT<S>& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

template <typename S>
QuatT<S> conjugate(const QuatT<S>& q) {
  return {q.w, -q.x, -q.y, -q.z};
}

template <typename S>
S dot(const QuatT<S>& a, const QuatT<S>& b) {
  return a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z;
}

template <typename S>
QuatT<S> normalized(const QuatT<S>& q) {
  using std::sqrt;
  const S n = sqrt(dot(q, q));
  return {q.w / n, q.x / n, q.y / n, q.z / n};
}

// Rotate v by unit quaternion q: v + 2 qv x (qv x v + w v).
template <typename S>
Vec3T<S> rotate(const QuatT<S>& q, const Vec3T<S>& v) {
  const S tx = 2.0 * (q.y * v.z - q.z * v.y);
  const S ty = 2.0 * (q.z * v.x - q.x * v.z);
  const S tz = 2.0 * (q.x * v.y - q.y * v.x);
  return {v.x + q.w * tx + (q.y * tz - q.z * ty),
          v.y + q.w * ty + (q.z * tx - q.x * tz),
          v.z + q.w * tz + (q.x * ty - q.y * tx)};
}

// Intrinsic ZYX Euler angles (roll about x, pitch about y, yaw about z) of
// the rotation R = Rz(yaw) Ry(pitch) Rx(roll) encoded by unit q. asin_fn is
// injected so the tape path can use its clamped variant.
template <typename S, typename Asin, typename Atan2>
void to_euler_zyx(const QuatT<S>& q, S& roll, S& pitch, S& yaw, Asin asin_fn,
                  Atan2 atan2_fn) {
  pitch = asin_fn(2.0 * (q.w * q.y - q.x * q.z));
  roll = atan2_fn(2.0 * (q.y * q.z + q.w * q.x),
                  1.0 - 2.0 * (q.x * q.x + q.y * q.y));
  yaw = atan2_fn(2.0 * (q.x * q.y + q.w * q.z),
                 1.0 - 2.0 * (q.y * q.y + q.z * q.z));
}

}  // namespace contpose::qops
