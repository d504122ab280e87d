#pragma once

#include <optional>
#include <span>
#include <vector>

#include "geometry.hpp"
#include "motionloss.hpp"
#include "posenet.hpp"
#include "traj.hpp"

namespace contpose {

// World-frame scene points used as registration targets.
struct LandmarkCloud {
  std::vector<Eigen::Vector3d> points;
};

LandmarkCloud random_cloud(int n, double extent, std::uint64_t seed);

// Throws DegenerateConfiguration unless the cloud has at least six finite
// points that are not (near-)collinear, the minimum for the pose to be
// observable from point registration.
void validate_cloud(const LandmarkCloud& cloud);

// One frame's landmark positions expressed in the camera at time t, indexed
// like the cloud.
struct FrameObservation {
  double t = 0.0;
  std::vector<Eigen::Vector3d> points_cam;
};

std::vector<FrameObservation> simulate_observations(
    const ContinuousTrajectory3& traj, const LandmarkCloud& cloud,
    std::span<const double> frame_times, double sigma_obs,
    std::uint64_t seed);

// Mean squared distance between the cloud mapped into the camera by pose
// and the observed points.
double registration_loss(const RigidTransform3& pose,
                         const FrameObservation& obs,
                         const LandmarkCloud& cloud);

// Training forms: the tracked pose is T_base composed with the net's (or
// pair's) output at t. Gradients accumulate like the other training losses.
double registration_fit_loss(const PoseNet& net, double t,
                             const RigidTransform3& T_base,
                             const FrameObservation& obs,
                             const LandmarkCloud& cloud,
                             PoseNet::Grads* grads = nullptr);
double registration_fit_loss(const IntrinsicPair& pair, double t,
                             const RigidTransform3& T_base,
                             const FrameObservation& obs,
                             const LandmarkCloud& cloud, PoseNet::Grads* g_o,
                             PoseNet::Grads* g_I);

// Mean squared pose loss of the composed pair output against targets; the
// pair counterpart of pose_loss, used by replay refits.
double pair_pose_loss(const IntrinsicPair& pair, std::span<const double> times,
                      std::span<const RigidTransform3> targets,
                      PoseNet::Grads* g_o, PoseNet::Grads* g_I);

enum class ImuCoupling { none, loose, tight };

// Incremental tracking harness. Per frame, the pose network (or intrinsic
// pair) is optimized against the frame's registration loss, plus
// preintegrated inertial priors on the segment's motion when coupled, plus
// the DOF loss and slow translation regularizer when intrinsic. Every
// keyframe the stored list of per-frame net targets is refit to counter
// forgetting; the slow transform f_o also steps only on keyframes.
struct TrackConfig {
  int n_frames = 50;
  ReferenceFrame frame = ReferenceFrame::default_prev_frame;
  bool intrinsic = false;
  ImuCoupling imu = ImuCoupling::none;
  int keyframe_every = 10;
  int iters_per_frame = 50;
  int replay_iters = 20;
  double sigma_obs = 0.0;
  std::uint64_t seed = 0;
  double imu_rate = 100.0;
  // Weight of the preintegrated segment priors added to the registration
  // gradient. Loose constrains the net rotation at the frame time against
  // the gyro integral over the segment; tight adds a translation prior from
  // the double-integrated accelerometer seeded with a finite-difference
  // velocity estimate off the chained poses.
  double lambda_imu = 0.05;
  double lambda_dof = 1e-3;
  DofConfig dof;
  // A frame counts as lost when its fitted residual exceeds lost_factor
  // times the residual floor 3*sigma_obs^2 + resid_floor; five in a row
  // raise TrackingLost. resid_floor covers the optimization error left by a
  // finite per-frame budget, which dominates when observations are clean.
  double lost_factor = 10.0;
  double resid_floor = 1e-3;
  PoseNetConfig net{Architecture::decoupled,
                    2,
                    32,
                    {EncodingKind::sinusoidal, 2, std::nullopt},
                    PoseSpace::se3,
                    1e-2,
                    5e-3,
                    1e-4,
                    5e-5};
};

struct TrackReport {
  std::vector<TimedPose3> estimate;     // world poses at the frame times
  std::vector<double> frame_residuals;  // registration loss after each fit
  std::vector<double> frame_errors;     // translation error vs truth
  double ate = 0.0;                     // aligned ATE-RMSE
  double dof_naive = 0.0;               // statistic of the relative motions
  std::optional<double> dof_intrinsic;  // statistic of f_I when intrinsic
  // Final optimizer state, for replay and probing. Exactly one is set,
  // matching cfg.intrinsic.
  std::optional<PoseNet> net;
  std::optional<IntrinsicPair> pair;
};

TrackReport track(const ContinuousTrajectory3& traj,
                  const LandmarkCloud& cloud, const TrackConfig& cfg = {});

}  // namespace contpose
