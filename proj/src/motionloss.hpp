#pragma once

#include <span>
#include <vector>

#include "geometry.hpp"
#include "posenet.hpp"

namespace contpose {

// Normalization constants for the effective-DOF measure. The view angle maps
// Euler angles onto roughly [-1,1] under the assumption that relative views
// stay within half the field of view; lambda_o weighs the slow-transform
// translation regularizer wherever the two terms are combined.
struct DofConfig {
  double view_angle = 1.5707963267948966;  // radians
  double lambda_o = 0.01;
};

// Effective-DOF measure of one relative motion: L1 norm of the view-angle
// normalized Euler angles stacked with the unit translation direction.
// Translations below 1e-12 contribute nothing (the direction of a vanishing
// step carries no information).
double dof_loss(const RigidTransform3& T_I, const DofConfig& cfg = {});

// L1 norm of the slow transform's translation. Keeps the decomposition from
// drifting the intrinsic frame to infinity when rotations are small.
double l1_translation_reg(const RigidTransform3& T_o);

// dof_loss of every motion in the list, and the mean over frames.
std::vector<double> dof_per_frame(std::span<const RigidTransform3> motions,
                                  const DofConfig& cfg = {});
double dof_statistic(std::span<const RigidTransform3> motions,
                     const DofConfig& cfg = {});

// Centered moving average for plotting the per-frame curve; window is
// clamped to the series length.
std::vector<double> moving_average(std::span<const double> values,
                                   int window);

// Differentiable counterparts on a pose network, mean over the given times.
// Gradients accumulate into grads like the other training losses.
double dof_loss(const PoseNet& f_I, std::span<const double> times,
                const DofConfig& cfg = {}, PoseNet::Grads* grads = nullptr);
double l1_translation_reg(const PoseNet& f_o, std::span<const double> times,
                          PoseNet::Grads* grads = nullptr);

}  // namespace contpose
