#include "traj.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "errors.hpp"

namespace contpose {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_times(const std::vector<double>& times, std::size_t n_poses) {
  if (times.empty()) throw EmptyInput("trajectory needs control poses");
  if (times.size() != n_poses)
    throw LengthMismatch("control times and poses differ in length");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (times[i] <= times[i - 1])
      throw DegenerateConfiguration("control times must strictly increase");
}

// Index of the segment containing t (clamped), plus interpolation fraction.
std::pair<int, double> locate(const std::vector<double>& times, double t) {
  if (times.size() == 1) return {0, 0.0};
  t = std::clamp(t, times.front(), times.back());
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const auto i = std::clamp<std::ptrdiff_t>(
      it - times.begin() - 1, 0, static_cast<std::ptrdiff_t>(times.size()) - 2);
  const double u = (t - times[i]) / (times[i + 1] - times[i]);
  return {static_cast<int>(i), std::clamp(u, 0.0, 1.0)};
}

}  // namespace

ContinuousTrajectory3 ContinuousTrajectory3::from_poses(
    std::vector<double> times, std::vector<RigidTransform3> poses) {
  check_times(times, poses.size());
  ContinuousTrajectory3 tr;
  std::vector<double> x(poses.size()), y(poses.size()), z(poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i) {
    x[i] = poses[i].translation.x();
    y[i] = poses[i].translation.y();
    z[i] = poses[i].translation.z();
  }
  tr.tx_ = CubicSpline(times, std::move(x));
  tr.ty_ = CubicSpline(times, std::move(y));
  tr.tz_ = CubicSpline(times, std::move(z));
  tr.times_ = std::move(times);
  tr.poses_ = std::move(poses);
  return tr;
}

RigidTransform3 ContinuousTrajectory3::pose(double t) const {
  const auto [i, u] = locate(times_, t);
  const UnitQuaternion q =
      times_.size() == 1
          ? poses_[0].rotation
          : slerp(poses_[i].rotation, poses_[i + 1].rotation, u);
  return {q, position(t)};
}

Eigen::Vector3d ContinuousTrajectory3::position(double t) const {
  return {tx_.eval(t), ty_.eval(t), tz_.eval(t)};
}

ContinuousTrajectory2 ContinuousTrajectory2::from_poses(
    std::vector<double> times, std::vector<RigidTransform2> poses) {
  check_times(times, poses.size());
  ContinuousTrajectory2 tr;
  std::vector<double> x(poses.size()), y(poses.size()), a(poses.size());
  double prev = 0.0;
  for (std::size_t i = 0; i < poses.size(); ++i) {
    x[i] = poses[i].translation.x();
    y[i] = poses[i].translation.y();
    // Unwrap so the spline never takes the long way around.
    double ang = poses[i].angle;
    if (i > 0) ang = prev + wrap_angle(ang - prev);
    a[i] = ang;
    prev = ang;
  }
  tr.tx_ = CubicSpline(times, std::move(x));
  tr.ty_ = CubicSpline(times, std::move(y));
  tr.ang_ = CubicSpline(times, std::move(a));
  tr.times_ = std::move(times);
  tr.poses_ = std::move(poses);
  return tr;
}

RigidTransform2 ContinuousTrajectory2::pose(double t) const {
  return {wrap_angle(ang_.eval(t)), {tx_.eval(t), ty_.eval(t)}};
}

PlanarSample sample_planar_trajectory(std::uint64_t seed, int n_control,
                                      int n_frames,
                                      const PlanarBounds& bounds) {
  if (n_control < 2 || n_frames < 1)
    throw DegenerateConfiguration("need at least 2 control points, 1 frame");
  if (bounds.max_angle < 0 || bounds.max_shift < 0)
    throw DegenerateConfiguration("bounds must be nonnegative");
  Rng rng(seed);
  std::vector<double> times(n_control);
  std::vector<RigidTransform2> poses(n_control);
  for (int i = 0; i < n_control; ++i) {
    times[i] = static_cast<double>(i) / (n_control - 1);
    if (i == 0) continue;  // start at the identity crop
    poses[i].angle = rng.uniform(-bounds.max_angle, bounds.max_angle);
    poses[i].translation = {rng.uniform(-bounds.max_shift, bounds.max_shift),
                            rng.uniform(-bounds.max_shift, bounds.max_shift)};
  }
  PlanarSample out;
  out.traj = ContinuousTrajectory2::from_poses(std::move(times),
                                               std::move(poses));
  out.frame_times.resize(n_frames);
  for (int i = 0; i < n_frames; ++i)
    out.frame_times[i] = n_frames == 1 ? 0.0
                                       : static_cast<double>(i) / (n_frames - 1);
  return out;
}

ContinuousTrajectory3 circular_orbit(double radius, double angular_speed,
                                     double z_amplitude, int n_frames) {
  if (radius <= 0) throw DegenerateConfiguration("orbit radius must be > 0");
  if (n_frames < 2) throw DegenerateConfiguration("orbit needs >= 2 frames");
  std::vector<double> times(n_frames);
  std::vector<RigidTransform3> poses(n_frames);
  for (int i = 0; i < n_frames; ++i) {
    const double t = static_cast<double>(i) / (n_frames - 1);
    times[i] = t;
    const double th = angular_speed * t;
    // Triangle wave: one up-down-return vertical cycle at constant speed.
    const double tri = t < 0.25  ? 4.0 * t
                       : t < 0.75 ? 2.0 - 4.0 * t
                                  : 4.0 * t - 4.0;
    const Eigen::Vector3d p(radius * std::cos(th), radius * std::sin(th),
                            z_amplitude * tri);
    // Camera z looks at the origin; x chosen perpendicular to world up.
    const Eigen::Vector3d fwd = (-p).normalized();
    Eigen::Vector3d right = Eigen::Vector3d::UnitZ().cross(fwd);
    if (right.norm() < 1e-9) right = Eigen::Vector3d::UnitX();
    right.normalize();
    const Eigen::Vector3d up = fwd.cross(right);
    Eigen::Matrix3d R;
    R.col(0) = right;
    R.col(1) = up;
    R.col(2) = fwd;
    poses[i] = {UnitQuaternion::from_matrix(R), p};
  }
  return ContinuousTrajectory3::from_poses(std::move(times), std::move(poses));
}

double trajectory_diameter(const ContinuousTrajectory3& traj,
                           const std::vector<double>& times) {
  double best = 0.0;
  std::vector<Eigen::Vector3d> pts;
  pts.reserve(times.size());
  for (double t : times) pts.push_back(traj.position(t));
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      best = std::max(best, (pts[i] - pts[j]).norm());
  return best;
}

std::vector<RigidTransform3> perturb(const ContinuousTrajectory3& traj,
                                     const std::vector<double>& frame_times,
                                     const NoiseModel& model,
                                     std::uint64_t seed) {
  if (model.anchor_count < 2)
    throw DegenerateConfiguration("need at least 2 noise anchors");
  if (frame_times.empty()) throw EmptyInput("no frame times");
  Rng rng(seed);
  const double rot_max = model.rotation_max_deg * kPi / 180.0;
  const double trans_max =
      model.translation_max * trajectory_diameter(traj, frame_times);

  // Anchors uniformly spread over the frame-time range, noise i.i.d. there.
  const int A = model.anchor_count;
  const double t0 = frame_times.front(), t1 = frame_times.back();
  std::vector<double> at(A);
  std::vector<UnitQuaternion> aq(A);
  Eigen::MatrixXd av(3, A);
  for (int a = 0; a < A; ++a) {
    at[a] = t0 + (t1 - t0) * a / (A - 1);
    Eigen::Vector3d axis(rng.normal(), rng.normal(), rng.normal());
    while (axis.norm() < 1e-9)
      axis = {rng.normal(), rng.normal(), rng.normal()};
    aq[a] = UnitQuaternion::from_axis_angle(axis, rng.uniform(0.0, rot_max));
    Eigen::Vector3d dir(rng.normal(), rng.normal(), rng.normal());
    while (dir.norm() < 1e-9) dir = {rng.normal(), rng.normal(), rng.normal()};
    av.col(a) = dir.normalized() * rng.uniform(0.0, trans_max);
  }
  CubicSpline nx(at, std::vector<double>(av.row(0).begin(), av.row(0).end()));
  CubicSpline ny(at, std::vector<double>(av.row(1).begin(), av.row(1).end()));
  CubicSpline nz(at, std::vector<double>(av.row(2).begin(), av.row(2).end()));

  std::vector<RigidTransform3> out;
  out.reserve(frame_times.size());
  for (double t : frame_times) {
    const auto [i, u] = locate(at, t);
    // Slerp keeps rotation noise inside the geodesic ball of the anchors.
    const UnitQuaternion dq = slerp(aq[i], aq[i + 1], u);
    Eigen::Vector3d dv(nx.eval(t), ny.eval(t), nz.eval(t));
    // Cubic interpolation can overshoot: clamp each dimension to the anchor
    // extremes, then cap the norm at the configured maximum.
    for (int d = 0; d < 3; ++d) {
      const double lo = av.row(d).minCoeff(), hi = av.row(d).maxCoeff();
      dv(d) = std::clamp(dv(d), lo, hi);
    }
    if (dv.norm() > trans_max && trans_max >= 0.0 && dv.norm() > 0.0)
      dv *= trans_max / dv.norm();
    const RigidTransform3 gt = traj.pose(t);
    out.push_back({gt.rotation * dq, gt.translation + dv});
  }
  return out;
}

std::vector<TimedPose3> resample(const std::vector<TimedPose3>& poses,
                                 double from_hz, double to_hz) {
  if (poses.empty()) throw EmptyInput("resample: no poses");
  if (from_hz <= 0 || to_hz <= 0)
    throw DegenerateConfiguration("sample rates must be > 0");
  if (to_hz == from_hz) return poses;

  const double ratio = from_hz / to_hz;
  const long k = std::lround(ratio);
  if (k >= 2 && std::abs(ratio - static_cast<double>(k)) < 1e-9) {
    std::vector<TimedPose3> out;
    out.reserve((poses.size() + k - 1) / k);
    for (std::size_t i = 0; i < poses.size(); i += k) out.push_back(poses[i]);
    return out;
  }

  std::vector<double> times;
  std::vector<RigidTransform3> ps;
  times.reserve(poses.size());
  ps.reserve(poses.size());
  for (const auto& tp : poses) {
    times.push_back(tp.t);
    ps.push_back(tp.pose);
  }
  const auto traj =
      ContinuousTrajectory3::from_poses(std::move(times), std::move(ps));

  std::vector<TimedPose3> out;
  const double t0 = traj.t_min(), t1 = traj.t_max();
  const long n = static_cast<long>(std::floor((t1 - t0) * to_hz + 1e-9));
  out.reserve(n + 1);
  for (long i = 0; i <= n; ++i) {
    const double t = t0 + static_cast<double>(i) / to_hz;
    out.push_back({t, traj.pose(t)});
  }
  return out;
}

void save_tum(const std::string& path, const std::vector<TimedPose3>& poses) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  char line[256];
  for (const auto& [t, pose] : poses) {
    const auto& tr = pose.translation;
    const auto& q = pose.rotation;
    std::snprintf(line, sizeof(line),
                  "%.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g\n", t,
                  tr.x(), tr.y(), tr.z(), q.x(), q.y(), q.z(), q.w());
    out << line;
  }
  if (!out) throw IoError("write failed: " + path);
}

std::vector<TimedPose3> load_tum(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  std::vector<TimedPose3> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    double t, tx, ty, tz, qx, qy, qz, qw;
    if (!(ss >> t >> tx >> ty >> tz >> qx >> qy >> qz >> qw))
      throw IoError("malformed trajectory line: " + line);
    out.push_back({t, {UnitQuaternion(qw, qx, qy, qz), {tx, ty, tz}}});
  }
  return out;
}

}  // namespace contpose
