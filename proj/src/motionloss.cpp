#include "motionloss.hpp"

#include <algorithm>
#include <cmath>

#include "autodiff.hpp"
#include "errors.hpp"

namespace contpose {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_config(const DofConfig& cfg, const char* who) {
  if (!(cfg.view_angle > 0.0) || !(cfg.view_angle < kPi))
    throw DegenerateConfiguration(std::string(who) +
                                  ": view angle outside (0, pi)");
  if (cfg.lambda_o < 0.0)
    throw DegenerateConfiguration(std::string(who) + ": negative lambda_o");
}

void require_se3(const PoseNet& net, const char* who) {
  if (net.config().space != PoseSpace::se3)
    throw DegenerateConfiguration(std::string(who) +
                                  ": needs an se3 pose network");
}

double asin_clamped(double x) {
  return std::asin(std::clamp(x, -1.0, 1.0));
}

double atan2_plain(double y, double x) { return std::atan2(y, x); }

}  // namespace

double dof_loss(const RigidTransform3& T_I, const DofConfig& cfg) {
  check_config(cfg, "dof_loss");
  double roll, pitch, yaw;
  qops::to_euler_zyx(T_I.rotation.raw(), roll, pitch, yaw, asin_clamped,
                     atan2_plain);
  const double s = 2.0 / cfg.view_angle;
  double L = std::abs(s * roll) + std::abs(s * pitch) + std::abs(s * yaw);
  const double n = T_I.translation.norm();
  if (n >= 1e-12) L += T_I.translation.cwiseAbs().sum() / n;
  return L;
}

double l1_translation_reg(const RigidTransform3& T_o) {
  return T_o.translation.cwiseAbs().sum();
}

std::vector<double> dof_per_frame(std::span<const RigidTransform3> motions,
                                  const DofConfig& cfg) {
  check_config(cfg, "dof_per_frame");
  std::vector<double> out;
  out.reserve(motions.size());
  for (const auto& m : motions) out.push_back(dof_loss(m, cfg));
  return out;
}

double dof_statistic(std::span<const RigidTransform3> motions,
                     const DofConfig& cfg) {
  if (motions.empty()) throw EmptyInput("dof_statistic: no motions");
  const auto per = dof_per_frame(motions, cfg);
  double sum = 0.0;
  for (double v : per) sum += v;
  return sum / static_cast<double>(per.size());
}

std::vector<double> moving_average(std::span<const double> values,
                                   int window) {
  if (values.empty()) throw EmptyInput("moving_average: no values");
  if (window < 1)
    throw DegenerateConfiguration("moving_average: window must be >= 1");
  const int n = static_cast<int>(values.size());
  const int w = std::min(window, n);
  std::vector<double> out(values.size());
  for (int i = 0; i < n; ++i) {
    const int lo = std::max(0, i - w / 2);
    const int hi = std::min(n, lo + w);
    double sum = 0.0;
    for (int j = lo; j < hi; ++j) sum += values[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(i)] = sum / static_cast<double>(hi - lo);
  }
  return out;
}

double dof_loss(const PoseNet& f_I, std::span<const double> times,
                const DofConfig& cfg, PoseNet::Grads* grads) {
  check_config(cfg, "dof_loss");
  require_se3(f_I, "dof_loss");
  if (times.empty()) throw EmptyInput("dof_loss: no times");
  const auto k = times.size();

  PoseNet::EvalContext ctx;
  const auto batch = f_I.eval(times, 0, ctx);

  ad::Tape tape;
  std::vector<ad::Var> tv, rv;
  tv.reserve(3 * k);
  rv.reserve(4 * k);
  for (std::size_t j = 0; j < k; ++j) {
    for (int i = 0; i < 3; ++i)
      tv.push_back(ad::make_leaf(tape, batch.t0(i, j)));
    for (int i = 0; i < 4; ++i)
      rv.push_back(ad::make_leaf(tape, batch.r0(i, j)));
  }

  ad::Var L = ad::make_const(tape, 0.0);
  const double s = 2.0 / cfg.view_angle;
  for (std::size_t j = 0; j < k; ++j) {
    const auto q = quat_head(rv[4 * j + 0], rv[4 * j + 1], rv[4 * j + 2],
                             rv[4 * j + 3]);
    ad::Var roll, pitch, yaw;
    qops::to_euler_zyx(q, roll, pitch, yaw, ad::asin_clamped, ad::atan2);
    L = L + ad::abs(s * roll) + ad::abs(s * pitch) + ad::abs(s * yaw);

    const Eigen::Vector3d v{batch.t0(0, j), batch.t0(1, j), batch.t0(2, j)};
    if (v.norm() >= 1e-12) {
      ad::Var n = ad::sqrt(ad::sq(tv[3 * j + 0]) + ad::sq(tv[3 * j + 1]) +
                           ad::sq(tv[3 * j + 2]));
      L = L + ad::abs(tv[3 * j + 0] / n) + ad::abs(tv[3 * j + 1] / n) +
          ad::abs(tv[3 * j + 2] / n);
    }
  }
  L = L / static_cast<double>(k);
  if (!std::isfinite(L.v)) throw NonFiniteLoss("dof loss is not finite");

  if (grads) {
    const auto adj = tape.gradient(L.idx);
    PoseNet::Batch seeds;
    seeds.t0.resize(3, static_cast<Eigen::Index>(k));
    seeds.r0.resize(4, static_cast<Eigen::Index>(k));
    for (std::size_t j = 0; j < k; ++j) {
      for (int i = 0; i < 3; ++i) seeds.t0(i, j) = adj[tv[3 * j + i].idx];
      for (int i = 0; i < 4; ++i) seeds.r0(i, j) = adj[rv[4 * j + i].idx];
    }
    f_I.backprop(ctx, seeds, *grads);
  }
  return L.v;
}

double l1_translation_reg(const PoseNet& f_o, std::span<const double> times,
                          PoseNet::Grads* grads) {
  require_se3(f_o, "l1_translation_reg");
  if (times.empty()) throw EmptyInput("l1_translation_reg: no times");
  const auto k = times.size();

  PoseNet::EvalContext ctx;
  const auto batch = f_o.eval(times, 0, ctx);

  ad::Tape tape;
  std::vector<ad::Var> tv;
  tv.reserve(3 * k);
  for (std::size_t j = 0; j < k; ++j)
    for (int i = 0; i < 3; ++i)
      tv.push_back(ad::make_leaf(tape, batch.t0(i, j)));

  ad::Var L = ad::make_const(tape, 0.0);
  for (auto& v : tv) L = L + ad::abs(v);
  L = L / static_cast<double>(k);
  if (!std::isfinite(L.v))
    throw NonFiniteLoss("translation regularizer is not finite");

  if (grads) {
    const auto adj = tape.gradient(L.idx);
    PoseNet::Batch seeds;
    seeds.t0.resize(3, static_cast<Eigen::Index>(k));
    for (std::size_t j = 0; j < k; ++j)
      for (int i = 0; i < 3; ++i) seeds.t0(i, j) = adj[tv[3 * j + i].idx];
    f_o.backprop(ctx, seeds, *grads);
  }
  return L.v;
}

}  // namespace contpose
