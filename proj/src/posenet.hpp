#pragma once

#include <span>
#include <string>
#include <vector>

#include "geometry.hpp"
#include "mlp.hpp"
#include "quat_ops.hpp"

namespace contpose {

enum class PoseSpace { se2, se3 };
enum class Architecture { coupled, decoupled };

struct PoseNetConfig {
  Architecture architecture = Architecture::decoupled;
  int layers = 8;  // hidden layers
  int width = 256;
  EncodingConfig encoding{EncodingKind::sinusoidal, 5, std::nullopt};
  PoseSpace space = PoseSpace::se3;
  double lr_trans = 1e-3;
  double lr_rot = 2e-4;
  double lr_trans_final = 1e-5;
  double lr_rot_final = 1e-6;
};

// Rotation head: tanh squashes each raw coordinate into [-1,1], then the
// vector is normalized to a unit quaternion. Shared between the plain
// double path and the tape path so both use the same formula.
template <typename S>
qops::QuatT<S> quat_head(S r0, S r1, S r2, S r3) {
  using std::tanh;
  qops::QuatT<S> q{tanh(r0), tanh(r1), tanh(r2), tanh(r3)};
  return qops::normalized(q);
}

// Continuous time -> pose map. Raw network heads are translation rows first,
// rotation rows after (one shared trunk when coupled, two nets otherwise).
class PoseNet {
public:
  // Identity initialization: the final layer is zeroed and the rotation bias
  // pre-loads tanh with atanh(1 - 1e-6) on the scalar part, so an untrained
  // net maps every t to the identity pose.
  static PoseNet create(const PoseNetConfig& cfg, Rng& rng);

  const PoseNetConfig& config() const { return cfg_; }

  RigidTransform3 pose3_at(double t) const;
  RigidTransform2 pose2_at(double t) const;

  // Batched raw head evaluation with exact time derivatives up to `order`.
  struct Batch {
    Eigen::MatrixXd t0, t1, t2;  // translation head rows (3 or 2) x k
    Eigen::MatrixXd r0, r1, r2;  // rotation head rows (4 or 1) x k
  };
  struct EvalContext {
    MlpWorkspace trans_ws, rot_ws;
    int order = 0;
  };
  Batch eval(std::span<const double> times, int order, EvalContext& ctx) const;

  // Adjoint seeds use the Batch layout; empty matrices mean zero seeds.
  struct Grads {
    MlpGrads trans, rot;  // rot unused when coupled
  };
  Grads make_grads() const;
  void backprop(const EvalContext& ctx, const Batch& seeds, Grads& g) const;

  // Per-subnet Adam with the configured exponential schedules.
  struct Trainer {
    AdamState trans, rot;
    LrSchedule sched_trans, sched_rot;
    long step = 0;
    // Coarse-to-fine anneal over the run, when enabled: alpha ramps 0 -> F.
    bool anneal_encoding = false;
  };
  Trainer make_trainer(long total_steps, bool anneal_encoding = false) const;
  void apply(Trainer& tr, const Grads& g);

  int trans_dim() const { return cfg_.space == PoseSpace::se3 ? 3 : 2; }
  int rot_dim() const { return cfg_.space == PoseSpace::se3 ? 4 : 1; }

  void save(const std::string& path, std::uint64_t seed) const;
  static PoseNet load(const std::string& path);

  // Exposed for checkpoint and test plumbing.
  Mlp trans_net;          // full net when coupled
  Mlp rot_net;            // empty when coupled

private:
  PoseNetConfig cfg_;
  bool coupled() const { return cfg_.architecture == Architecture::coupled; }
};

// Vector-to-rigid-transform conversion P(.) applied to raw head columns.
RigidTransform3 pose_from_heads3(const Eigen::VectorXd& t,
                                 const Eigen::VectorXd& r);
RigidTransform2 pose_from_heads2(const Eigen::VectorXd& t, double r);

// T_init composed with the refinement P(f(t)).
RigidTransform3 refined_pose(const PoseNet& net, double t,
                             const RigidTransform3& T_init);

enum class ReferenceFrame { default_prev_frame, world, random_perturbed };

// World pose of the frame at t given the previous world pose. The default
// frame chains the prediction onto the previous camera; world asks the net
// for an absolute pose; random_perturbed inserts a fixed seeded offset
// between the previous camera and the prediction.
RigidTransform3 tracked_pose(const PoseNet& net, double t,
                             const RigidTransform3& T_prev_world,
                             ReferenceFrame frame,
                             const RigidTransform3* random_offset = nullptr);

// Two-network split: f_o carries the slow extrinsic placement (updated on
// keyframes only), f_I the low-dimensional intrinsic motion.
struct IntrinsicPair {
  PoseNet f_o;
  PoseNet f_I;
  int keyframe_every = 10;
};

struct IntrinsicPose {
  RigidTransform3 total;  // T_o * T_I
  RigidTransform3 T_I;
  RigidTransform3 T_o;
};

IntrinsicPose intrinsic_pose(const IntrinsicPair& pair, double t);

// Mean squared pose loss against target poses, quaternions sign-aligned.
// Accumulates parameter gradients into grads when non-null.
double pose_loss(const PoseNet& net, std::span<const double> times,
                 std::span<const RigidTransform3> targets,
                 PoseNet::Grads* grads = nullptr);

// Fits P(f(t_j)) to the target poses by Adam on pose_loss. Returns the
// final mean loss. Used for overfit sanity checks and for refitting a net
// to stored relative poses.
struct PoseFitOptions {
  int iterations = 1500;
  double lr_trans = 1e-2;
  double lr_rot = 5e-3;
  double lr_decay = 0.01;  // final = initial * decay
};
double fit_pose_targets(PoseNet& net, std::span<const double> times,
                        std::span<const RigidTransform3> targets,
                        const PoseFitOptions& opt = {});

}  // namespace contpose
