#pragma once

#include <Eigen/Dense>
#include <vector>

#include "geometry.hpp"
#include "image.hpp"
#include "traj.hpp"

namespace contpose {

// Closed-form least-squares alignment est -> gt: gt ~ scale * R * est + t.
struct AlignmentResult {
  UnitQuaternion rotation;
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  double scale = 1.0;     // 1 when fit rigid-only
  double residual = 0.0;  // position RMSE after alignment

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const {
    return scale * rotation.rotate(p) + translation;
  }
};

// Umeyama's method; with_scale switches between similarity and rigid fits.
// Throws DegenerateConfiguration when fewer than 3 pairs are given or the
// source points are (near-)collinear, where the rotation is not unique.
AlignmentResult umeyama_align(const std::vector<Eigen::Vector3d>& est,
                              const std::vector<Eigen::Vector3d>& gt,
                              bool with_scale = false);

// Position RMSE between matched trajectories, optionally after rigid
// alignment of est onto gt.
double ate_rmse(const std::vector<TimedPose3>& est,
                const std::vector<TimedPose3>& gt, bool align = true);

struct RotTransError {
  double rot_deg = 0.0;  // mean geodesic angle, degrees
  double trans = 0.0;    // mean position distance, scene units
};

// Mean per-pose errors, optionally after a global rigid alignment whose
// rotation is also applied to the estimated orientations.
RotTransError rot_trans_error(const std::vector<TimedPose3>& est,
                              const std::vector<TimedPose3>& gt,
                              bool aligned = true);

// Peak signal-to-noise ratio in dB for values in [0, 1]; identical images
// give +infinity.
double psnr(const Image& a, const Image& b);

// Mean structural similarity over 11x11 Gaussian windows (sigma 1.5,
// K1 = 0.01, K2 = 0.03, dynamic range 1), channels averaged.
double ssim(const Image& a, const Image& b);

}  // namespace contpose
