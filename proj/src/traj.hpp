#pragma once

#include <string>
#include <vector>

#include "geometry.hpp"
#include "rng.hpp"
#include "spline.hpp"

namespace contpose {

struct TimedPose3 {
  double t = 0.0;
  RigidTransform3 pose;
};

// Smooth pose curve through control poses: natural cubic spline for each
// translation dimension, piecewise slerp for rotation. Evaluation clamps to
// [t_min, t_max] and reproduces the control poses at their times.
class ContinuousTrajectory3 {
public:
  static ContinuousTrajectory3 from_poses(std::vector<double> times,
                                          std::vector<RigidTransform3> poses);

  RigidTransform3 pose(double t) const;
  Eigen::Vector3d position(double t) const;

  double t_min() const { return times_.front(); }
  double t_max() const { return times_.back(); }
  const std::vector<double>& control_times() const { return times_; }
  const std::vector<RigidTransform3>& control_poses() const { return poses_; }

private:
  std::vector<double> times_;
  std::vector<RigidTransform3> poses_;
  CubicSpline tx_, ty_, tz_;
};

// Planar counterpart: splines on x, y and on the unwrapped angle.
class ContinuousTrajectory2 {
public:
  static ContinuousTrajectory2 from_poses(std::vector<double> times,
                                          std::vector<RigidTransform2> poses);

  RigidTransform2 pose(double t) const;
  double t_min() const { return times_.front(); }
  double t_max() const { return times_.back(); }
  const std::vector<double>& control_times() const { return times_; }
  const std::vector<RigidTransform2>& control_poses() const { return poses_; }

private:
  std::vector<double> times_;
  std::vector<RigidTransform2> poses_;
  CubicSpline tx_, ty_, ang_;
};

// Random smooth planar motion: n_control random SE(2) control points on
// [0,1] (the first is identity so motion starts at the reference crop),
// sampled within the given bounds, plus n_frames uniform frame times.
struct PlanarBounds {
  double max_angle = 0.35;  // radians
  double max_shift = 10.0;  // same units as the consuming image, pixels
};

struct PlanarSample {
  ContinuousTrajectory2 traj;
  std::vector<double> frame_times;
};

PlanarSample sample_planar_trajectory(std::uint64_t seed, int n_control = 10,
                                      int n_frames = 7,
                                      const PlanarBounds& bounds = {});

// Camera orbit in the xy-plane at the given radius, z running one triangle
// cycle (up, down, back) at constant vertical speed, always looking at the
// origin (z axis of the camera points at the scene center). Control poses at
// n_frames uniform times on [0,1]; angular_speed is the total swept angle in
// radians over [0,1].
ContinuousTrajectory3 circular_orbit(double radius, double angular_speed,
                                     double z_amplitude, int n_frames);

// Time-correlated pose noise: i.i.d. perturbations at anchor frames
// (uniform random axis, magnitude uniform in [0, max]), slerp between
// anchors for rotation and per-dimension cubic interpolation for
// translation. translation_max is a fraction of the trajectory diameter.
struct NoiseModel {
  double rotation_max_deg = 10.0;
  double translation_max = 0.1;
  int anchor_count = 4;
};

std::vector<RigidTransform3> perturb(const ContinuousTrajectory3& traj,
                                     const std::vector<double>& frame_times,
                                     const NoiseModel& model,
                                     std::uint64_t seed);

// Largest pairwise distance between positions at the given times.
double trajectory_diameter(const ContinuousTrajectory3& traj,
                           const std::vector<double>& times);

// Rate conversion for a uniformly sampled pose list. Downsampling by an
// integer factor decimates (keeps every k-th input pose untouched); anything
// else interpolates through a ContinuousTrajectory3 on the uniform to_hz
// grid. to_hz == from_hz returns the input unchanged.
std::vector<TimedPose3> resample(const std::vector<TimedPose3>& poses,
                                 double from_hz, double to_hz);

// Timestamped trajectory text: "t tx ty tz qx qy qz qw" per line.
void save_tum(const std::string& path, const std::vector<TimedPose3>& poses);
std::vector<TimedPose3> load_tum(const std::string& path);

}  // namespace contpose
