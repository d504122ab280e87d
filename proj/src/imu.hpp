#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "geometry.hpp"
#include "posenet.hpp"
#include "traj.hpp"

namespace contpose {

// One inertial reading in the body frame; accel is gravity-free.
struct ImuSample {
  double t = 0.0;
  Eigen::Vector3d omega = Eigen::Vector3d::Zero();  // rad/s
  Eigen::Vector3d accel = Eigen::Vector3d::Zero();  // scene units / s^2
};

// Camera pose in the body frame, constant over a run.
struct BodyCameraExtrinsic {
  RigidTransform3 T_bc;
};

// Inertial stream at the given rate from numerical differentiation of the
// trajectory: body rates from the quaternion log of relative rotations over
// a central window, body acceleration from second central differences of
// position. The two boundary samples reuse the nearest interior stencil.
// noise_std adds i.i.d. Gaussian noise to every component of both readings.
std::vector<ImuSample> simulate_imu(const ContinuousTrajectory3& traj,
                                    double hz, double noise_std = 0.0,
                                    std::uint64_t seed = 0);

// Rotation reached after dt seconds at constant body rate omega: an angle
// dt*|omega| about omega's direction; identity below |omega| = 1e-12.
UnitQuaternion delta_quat(const Eigen::Vector3d& omega, double dt);

// Left-to-right product of per-sample delta rotations over [t_from, t_to],
// zero-order hold on the reading at each interval's left end. Throws
// InsufficientCoverage when the stream does not span the interval.
UnitQuaternion integrate_gyro(const std::vector<ImuSample>& stream,
                              const UnitQuaternion& q0, double t_from,
                              double t_to);

// Gyro and accelerometer integrals over [t_from, t_to], zero-order hold on
// each reading like integrate_gyro: attitude increment dq, velocity
// increment dv, and zero-initial-velocity displacement dp, all expressed in
// the body frame at t_from. With R the world attitude at t_from and dt the
// interval length, p(t_to) = p(t_from) + R (v0 dt + dp) and
// v(t_to) = v(t_from) + R dv for body-frame initial velocity v0.
struct PreintegratedSegment {
  UnitQuaternion dq;
  Eigen::Vector3d dv = Eigen::Vector3d::Zero();
  Eigen::Vector3d dp = Eigen::Vector3d::Zero();
};
PreintegratedSegment preintegrate_segment(const std::vector<ImuSample>& stream,
                                          double t_from, double t_to);

// Stream readings linearly interpolated at t, clamped to the end samples.
Eigen::Vector3d sample_omega(const std::vector<ImuSample>& stream, double t);
Eigen::Vector3d sample_accel(const std::vector<ImuSample>& stream, double t);

// CSV stream file with header "t,wx,wy,wz,ax,ay,az" (SI units).
void save_imu_csv(const std::string& path,
                  const std::vector<ImuSample>& stream);
std::vector<ImuSample> load_imu_csv(const std::string& path);

// The three inertial coupling losses. Each returns the loss value and, when
// grads is non-null, accumulates parameter gradients into it. All expect an
// SE(3) net and are invariant to quaternion sign flips of the net output.

// L1 between the net quaternion at each frame and the gyro integration
// carried forward from the net quaternion at the previous frame.
double loss_loose(const PoseNet& net, const std::vector<ImuSample>& stream,
                  std::span<const double> frame_times,
                  PoseNet::Grads* grads = nullptr);

// L1 between the exact time derivative of the net quaternion and the
// kinematic prediction 0.5 * q (x) [0, omega(t)].
// Loose coupling against a single integrated segment: sign-aligned
// component L1 between the net rotation at t_to and q_base composed with
// the integrated gyro increment over [t_from, t_to]. Incremental trackers
// pass q_base = identity, the net output being the motion since the
// previous frame.
double loss_loose_segment(const PoseNet& net,
                          const std::vector<ImuSample>& stream,
                          const UnitQuaternion& q_base, double t_from,
                          double t_to, PoseNet::Grads* grads = nullptr);

double loss_tight(const PoseNet& net, const std::vector<ImuSample>& stream,
                  std::span<const double> sample_times,
                  PoseNet::Grads* grads = nullptr);

// L1 between the second time derivative of the translation head and the
// accelerometer reading rotated into the net's output frame by the net's
// own (detached) rotation estimate.
double loss_acc(const PoseNet& net, const std::vector<ImuSample>& stream,
                std::span<const double> sample_times,
                PoseNet::Grads* grads = nullptr);

}  // namespace contpose
