#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <span>
#include <vector>

#include "errors.hpp"
#include "geometry.hpp"
#include "motionloss.hpp"
#include "posenet.hpp"
#include "rng.hpp"

using namespace contpose;

namespace {

constexpr double kPi = 3.14159265358979323846;

PoseNetConfig small_cfg(EncodingKind enc = EncodingKind::sinusoidal) {
  PoseNetConfig cfg;
  cfg.architecture = Architecture::decoupled;
  cfg.layers = 2;
  cfg.width = 32;
  cfg.encoding = {enc, 5, std::nullopt};
  return cfg;
}

void randomize_head(PoseNet& net, Rng& rng, double scale = 0.3) {
  auto fill = [&](Eigen::MatrixXd& W) {
    for (Eigen::Index i = 0; i < W.size(); ++i)
      W.data()[i] = rng.uniform(-scale, scale);
  };
  fill(net.trans_net.w.back());
  if (net.rot_net.n_layers() > 0) fill(net.rot_net.w.back());
}

// Rotation built the way the Euler convention defines it, so the angles fed
// in are the oracle for what extraction must return.
UnitQuaternion from_euler(double roll, double pitch, double yaw) {
  const auto qx =
      UnitQuaternion::from_axis_angle(Eigen::Vector3d::UnitX(), roll);
  const auto qy =
      UnitQuaternion::from_axis_angle(Eigen::Vector3d::UnitY(), pitch);
  const auto qz =
      UnitQuaternion::from_axis_angle(Eigen::Vector3d::UnitZ(), yaw);
  return qz * qy * qx;
}

MlpGrads random_direction(const Mlp& m, Rng& rng) {
  MlpGrads d = MlpGrads::like(m);
  for (auto& W : d.w)
    for (Eigen::Index i = 0; i < W.size(); ++i) W.data()[i] = rng.normal();
  for (auto& b : d.b)
    for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = rng.normal();
  return d;
}

void step_along(Mlp& m, const MlpGrads& d, double h) {
  for (std::size_t l = 0; l < m.w.size(); ++l) {
    m.w[l] += h * d.w[l];
    m.b[l] += h * d.b[l];
  }
}

double grad_dot(const MlpGrads& g, const MlpGrads& d) {
  double s = 0.0;
  for (std::size_t l = 0; l < g.w.size(); ++l) {
    s += (g.w[l].array() * d.w[l].array()).sum();
    s += (g.b[l].array() * d.b[l].array()).sum();
  }
  return s;
}

double grad_norm(const MlpGrads& g) {
  double s = 0.0;
  for (const auto& W : g.w) s += W.squaredNorm();
  for (const auto& b : g.b) s += b.squaredNorm();
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("dof loss closed forms") {
  const DofConfig cfg;

  CHECK(dof_loss(RigidTransform3{}) == 0.0);

  RigidTransform3 tx;
  tx.translation = {2.5, 0.0, 0.0};
  CHECK(dof_loss(tx) == doctest::Approx(1.0).epsilon(1e-12));

  RigidTransform3 diag;
  diag.translation = {1.0, 1.0, 1.0};
  CHECK(dof_loss(diag) ==
        doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));

  RigidTransform3 rz;
  rz.rotation = UnitQuaternion::from_axis_angle(Eigen::Vector3d::UnitZ(), 0.2);
  CHECK(dof_loss(rz) ==
        doctest::Approx(2.0 * 0.2 / cfg.view_angle).epsilon(1e-12));
}

TEST_CASE("dof loss matches a step-by-step pipeline oracle") {
  Rng rng(7);
  DofConfig cfg;
  cfg.view_angle = 1.2;
  for (int trial = 0; trial < 50; ++trial) {
    // Principal-range angles round trip through the ZYX convention, so the
    // constructed values are the extraction oracle.
    const double roll = rng.uniform(-1.2, 1.2);
    const double pitch = rng.uniform(-1.2, 1.2);
    const double yaw = rng.uniform(-1.2, 1.2);
    RigidTransform3 T;
    T.rotation = from_euler(roll, pitch, yaw);
    T.translation = {rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0),
                     rng.uniform(-2.0, 2.0)};

    const double s = 2.0 / cfg.view_angle;
    double want = s * (std::abs(roll) + std::abs(pitch) + std::abs(yaw));
    const double n = T.translation.norm();
    if (n >= 1e-12)
      want += std::abs(T.translation.x() / n) +
              std::abs(T.translation.y() / n) +
              std::abs(T.translation.z() / n);
    CHECK(dof_loss(T, cfg) == doctest::Approx(want).epsilon(1e-9));
  }
}

TEST_CASE("translation regularizer closed forms") {
  CHECK(l1_translation_reg(RigidTransform3{}) == 0.0);
  RigidTransform3 T;
  T.translation = {1.0, -2.0, 0.0};
  CHECK(l1_translation_reg(T) == 3.0);
}

TEST_CASE("translation direction ignores positive scaling and vanishes at 0") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    RigidTransform3 a;
    a.rotation = UnitQuaternion::from_rotation_vector(
        {rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5),
         rng.uniform(-0.5, 0.5)});
    a.translation = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
                     rng.uniform(-1.0, 1.0)};
    RigidTransform3 b = a;
    b.translation *= rng.uniform(0.1, 50.0);
    CHECK(dof_loss(a) == doctest::Approx(dof_loss(b)).epsilon(1e-12));
  }

  RigidTransform3 rot_only;
  rot_only.rotation =
      UnitQuaternion::from_axis_angle(Eigen::Vector3d::UnitY(), 0.3);
  RigidTransform3 tiny = rot_only;
  tiny.translation = {1e-13, -1e-13, 0.0};
  CHECK(dof_loss(tiny) == dof_loss(rot_only));
}

TEST_CASE("dof loss is nonnegative and zero only at the identity") {
  Rng rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    RigidTransform3 T;
    T.rotation = UnitQuaternion::from_rotation_vector(
        {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
         rng.uniform(-1.0, 1.0)});
    T.translation = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
                     rng.uniform(-1.0, 1.0)};
    const double L = dof_loss(T);
    CHECK(L >= 0.0);
    const bool near_identity =
        geodesic_angle(T.rotation, UnitQuaternion::identity()) < 1e-9 &&
        T.translation.norm() < 1e-12;
    if (!near_identity) CHECK(L > 1e-6);
  }
}

TEST_CASE("single-axis motions score below generic six-dof motions") {
  Rng rng(17);
  DofConfig cfg;
  for (int trial = 0; trial < 100; ++trial) {
    const double angle = rng.uniform(0.05, 0.4);
    const double dist = rng.uniform(0.1, 2.0);

    RigidTransform3 one;
    one.rotation =
        UnitQuaternion::from_axis_angle(Eigen::Vector3d::UnitZ(), angle);
    one.translation = {dist, 0.0, 0.0};

    // Same total Euler mass and step length spread over every component.
    RigidTransform3 six;
    six.rotation = from_euler(angle / 3.0, angle / 3.0, angle / 3.0);
    six.translation = Eigen::Vector3d::Constant(dist / std::sqrt(3.0));

    CHECK(dof_loss(six, cfg) > dof_loss(one, cfg) + 0.5);
  }
}

TEST_CASE("dof statistic averages frames and rejects empty input") {
  std::vector<RigidTransform3> identities(5);
  CHECK(dof_statistic(identities) == 0.0);

  std::vector<RigidTransform3> axis(7);
  for (int i = 0; i < 7; ++i)
    axis[static_cast<std::size_t>(i)].translation = {0.5 + i, 0.0, 0.0};
  CHECK(dof_statistic(axis) == doctest::Approx(1.0).epsilon(1e-12));

  const auto per = dof_per_frame(axis);
  CHECK(per.size() == 7);
  for (double v : per) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(dof_statistic({}), EmptyInput);
}

TEST_CASE("generic motions score above axis-constrained motions on average") {
  Rng rng(19);
  int wins = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<RigidTransform3> constrained(10), generic(10);
    for (int i = 0; i < 10; ++i) {
      auto& c = constrained[static_cast<std::size_t>(i)];
      c.rotation = UnitQuaternion::from_axis_angle(Eigen::Vector3d::UnitZ(),
                                                   rng.uniform(0.05, 0.3));
      c.translation = {rng.uniform(0.1, 1.0), 0.0, 0.0};
      auto& g = generic[static_cast<std::size_t>(i)];
      g.rotation = from_euler(rng.uniform(0.05, 0.3), rng.uniform(0.05, 0.3),
                              rng.uniform(0.05, 0.3));
      g.translation = {rng.uniform(0.1, 1.0), rng.uniform(0.1, 1.0),
                       rng.uniform(0.1, 1.0)};
    }
    if (dof_statistic(generic) > dof_statistic(constrained)) ++wins;
  }
  CHECK(wins == 100);
}

TEST_CASE("moving average smooths and clamps its window") {
  std::vector<double> flat(9, 2.5);
  for (double v : moving_average(flat, 10)) CHECK(v == 2.5);

  std::vector<double> ramp{0.0, 1.0, 2.0, 3.0};
  const auto ma = moving_average(ramp, 1);
  for (std::size_t i = 0; i < ramp.size(); ++i) CHECK(ma[i] == ramp[i]);

  CHECK_THROWS_AS(moving_average({}, 3), EmptyInput);
  CHECK_THROWS_AS(moving_average(ramp, 0), DegenerateConfiguration);
}

TEST_CASE("dof config bounds are enforced") {
  RigidTransform3 T;
  T.translation = {1.0, 0.0, 0.0};

  DofConfig bad;
  bad.view_angle = 0.0;
  CHECK_THROWS_AS(dof_loss(T, bad), DegenerateConfiguration);
  bad.view_angle = kPi;
  CHECK_THROWS_AS(dof_loss(T, bad), DegenerateConfiguration);
  bad.view_angle = -0.3;
  CHECK_THROWS_AS(dof_loss(T, bad), DegenerateConfiguration);

  DofConfig neg;
  neg.lambda_o = -1.0;
  CHECK_THROWS_AS(dof_loss(T, neg), DegenerateConfiguration);
}

TEST_CASE("network dof loss agrees with the transform path") {
  Rng rng(23);
  PoseNet net = PoseNet::create(small_cfg(), rng);
  randomize_head(net, rng, 0.5);

  const std::vector<double> times{0.1, 0.45, 0.8};
  double mean = 0.0;
  for (double t : times) mean += dof_loss(net.pose3_at(t));
  mean /= static_cast<double>(times.size());
  CHECK(dof_loss(net, times) == doctest::Approx(mean).epsilon(1e-12));

  PoseNet fresh = PoseNet::create(small_cfg(), rng);
  CHECK(dof_loss(fresh, times) == 0.0);
  CHECK(l1_translation_reg(fresh, times) == 0.0);
}

TEST_CASE("network dof loss gradients match finite differences") {
  Rng rng(29);
  PoseNet net =
      PoseNet::create(small_cfg(EncodingKind::sigmoid_mlp_activation), rng);
  randomize_head(net, rng, 0.8);
  const std::vector<double> times{0.15, 0.4, 0.65, 0.9};

  for (int dir = 0; dir < 3; ++dir) {
    for (Mlp* sub : {&net.trans_net, &net.rot_net}) {
      const auto d = random_direction(*sub, rng);
      const double h = 1e-5;
      step_along(*sub, d, h);
      const double up = dof_loss(net, times);
      step_along(*sub, d, -2.0 * h);
      const double dn = dof_loss(net, times);
      step_along(*sub, d, h);

      auto g = net.make_grads();
      dof_loss(net, times, {}, &g);
      const double an =
          grad_dot(sub == &net.trans_net ? g.trans : g.rot, d);
      const double fd = (up - dn) / (2.0 * h);
      CHECK(std::abs(fd - an) <= 1e-4 * std::max(std::abs(an), 1.0));
    }
  }
}

TEST_CASE("translation regularizer gradients live on the translation net") {
  Rng rng(31);
  PoseNet net =
      PoseNet::create(small_cfg(EncodingKind::sigmoid_mlp_activation), rng);
  randomize_head(net, rng, 0.8);
  const std::vector<double> times{0.2, 0.5, 0.8};

  auto g = net.make_grads();
  l1_translation_reg(net, times, &g);
  CHECK(grad_norm(g.trans) > 0.0);
  CHECK(grad_norm(g.rot) == 0.0);

  for (int dir = 0; dir < 3; ++dir) {
    const auto d = random_direction(net.trans_net, rng);
    const double h = 1e-5;
    step_along(net.trans_net, d, h);
    const double up = l1_translation_reg(net, times);
    step_along(net.trans_net, d, -2.0 * h);
    const double dn = l1_translation_reg(net, times);
    step_along(net.trans_net, d, h);

    auto gg = net.make_grads();
    l1_translation_reg(net, times, &gg);
    const double an = grad_dot(gg.trans, d);
    const double fd = (up - dn) / (2.0 * h);
    CHECK(std::abs(fd - an) <= 1e-4 * std::max(std::abs(an), 1.0));
  }
}

TEST_CASE("network losses reject planar nets and empty times") {
  Rng rng(37);
  PoseNetConfig cfg = small_cfg();
  cfg.space = PoseSpace::se2;
  PoseNet planar = PoseNet::create(cfg, rng);
  const std::vector<double> times{0.5};
  CHECK_THROWS_AS(dof_loss(planar, times), DegenerateConfiguration);
  CHECK_THROWS_AS(l1_translation_reg(planar, times), DegenerateConfiguration);

  PoseNet net = PoseNet::create(small_cfg(), rng);
  CHECK_THROWS_AS(dof_loss(net, {}), EmptyInput);
  CHECK_THROWS_AS(l1_translation_reg(net, {}), EmptyInput);
}
