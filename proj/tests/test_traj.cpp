#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <vector>

#include "errors.hpp"
#include "geometry.hpp"
#include "rng.hpp"
#include "spline.hpp"
#include "traj.hpp"

using namespace contpose;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Independent natural-spline solve: assemble the full (not tridiagonal-
// structured) system for the knot second derivatives and solve it densely.
Eigen::VectorXd natural_second_derivs_dense(const std::vector<double>& x,
                                            const std::vector<double>& y) {
  const int n = static_cast<int>(x.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  A(0, 0) = 1.0;
  A(n - 1, n - 1) = 1.0;
  for (int i = 1; i + 1 < n; ++i) {
    const double h0 = x[i] - x[i - 1];
    const double h1 = x[i + 1] - x[i];
    A(i, i - 1) = h0;
    A(i, i) = 2.0 * (h0 + h1);
    A(i, i + 1) = h1;
    rhs(i) = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
  }
  return A.fullPivLu().solve(rhs);
}

// Segment cubic rebuilt from scratch: monomial coefficients solving the two
// value and two second-derivative conditions, evaluated directly.
double segment_cubic_eval(double x0, double x1, double y0, double y1,
                          double m0, double m1, double t) {
  Eigen::Matrix4d V;
  Eigen::Vector4d b;
  V << 1, x0, x0 * x0, x0 * x0 * x0,  //
      1, x1, x1 * x1, x1 * x1 * x1,   //
      0, 0, 2, 6 * x0,                //
      0, 0, 2, 6 * x1;
  b << y0, y1, m0, m1;
  const Eigen::Vector4d c = V.fullPivLu().solve(b);
  return c(0) + c(1) * t + c(2) * t * t + c(3) * t * t * t;
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i)
    out[i] = n == 1 ? a : a + (b - a) * i / (n - 1);
  return out;
}

double lag1_autocorr(const std::vector<double>& v) {
  const double mean =
      std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    den += (v[i] - mean) * (v[i] - mean);
    if (i + 1 < v.size()) num += (v[i] - mean) * (v[i + 1] - mean);
  }
  return num / den;
}

RigidTransform3 random_pose(Rng& rng) {
  return {UnitQuaternion(rng.normal(), rng.normal(), rng.normal(),
                         rng.normal()),
          {rng.normal(), rng.normal(), rng.normal()}};
}

}  // namespace

TEST_CASE("cubic spline matches dense natural-spline solve") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 3 + static_cast<int>(rng.uniform_index(10));
    std::vector<double> x(n), y(n);
    x[0] = rng.uniform(-1.0, 1.0);
    for (int i = 0; i < n; ++i) {
      if (i > 0) x[i] = x[i - 1] + rng.uniform(0.1, 2.0);
      y[i] = rng.normal(0.0, 3.0);
    }
    const CubicSpline s(x, y);
    const Eigen::VectorXd m = natural_second_derivs_dense(x, y);

    // Same knot curvatures as the dense solve, natural ends at zero.
    for (int i = 0; i < n; ++i)
      CHECK(s.second_deriv(x[i]) == doctest::Approx(m(i)).epsilon(1e-9));
    CHECK(s.second_deriv(x[0]) == doctest::Approx(0.0));
    CHECK(s.second_deriv(x[n - 1]) == doctest::Approx(0.0));

    // Values between knots match the per-segment cubic rebuilt from the
    // dense solution through an unrelated monomial parameterization.
    for (int k = 0; k < 20; ++k) {
      const double t = rng.uniform(x.front(), x.back());
      int i = 0;
      while (i + 2 < n && t >= x[i + 1]) ++i;
      const double ref =
          segment_cubic_eval(x[i], x[i + 1], y[i], y[i + 1], m(i), m(i + 1), t);
      CHECK(s.eval(t) == doctest::Approx(ref).epsilon(1e-9));
    }

    // Interpolation at the knots.
    for (int i = 0; i < n; ++i)
      CHECK(s.eval(x[i]) == doctest::Approx(y[i]).epsilon(1e-12));
  }
}

TEST_CASE("cubic spline derivatives are consistent with values") {
  const std::vector<double> x = linspace(0.0, 2.0, 9);
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::sin(3.0 * x[i]);
  const CubicSpline s(x, y);
  const double h = 1e-6;
  for (double t = 0.1; t < 1.95; t += 0.13) {
    const double fd1 = (s.eval(t + h) - s.eval(t - h)) / (2.0 * h);
    CHECK(s.deriv(t) == doctest::Approx(fd1).epsilon(1e-6));
    const double fd2 = (s.deriv(t + h) - s.deriv(t - h)) / (2.0 * h);
    CHECK(s.second_deriv(t) == doctest::Approx(fd2).epsilon(1e-5));
  }
}

TEST_CASE("cubic spline reproduces lines and degrades gracefully") {
  // Linear data has zero curvature everywhere, so the spline is the line.
  const std::vector<double> x = {0.0, 0.7, 1.1, 2.5, 4.0};
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = 2.0 * x[i] - 1.0;
  const CubicSpline lin(x, y);
  for (double t = 0.0; t <= 4.0; t += 0.37)
    CHECK(lin.eval(t) == doctest::Approx(2.0 * t - 1.0).epsilon(1e-12));

  const CubicSpline two({0.0, 1.0}, {1.0, 3.0});
  CHECK(two.eval(0.25) == doctest::Approx(1.5));
  CHECK(two.deriv(0.5) == doctest::Approx(2.0));

  const CubicSpline one({0.5}, {7.0});
  CHECK(one.eval(-3.0) == doctest::Approx(7.0));
  CHECK(one.deriv(0.5) == doctest::Approx(0.0));

  // Evaluation clamps to the knot range.
  CHECK(two.eval(-5.0) == doctest::Approx(1.0));
  CHECK(two.eval(50.0) == doctest::Approx(3.0));

  CHECK_THROWS_AS(CubicSpline({0.0, 1.0}, {1.0}), LengthMismatch);
  CHECK_THROWS_AS(CubicSpline({}, {}), LengthMismatch);
  CHECK_THROWS_AS(CubicSpline({0.0, 0.0}, {1.0, 2.0}),
                  DegenerateConfiguration);
}

TEST_CASE("3-d trajectory reproduces control poses and clamps") {
  Rng rng(23);
  const int n = 8;
  std::vector<double> times = linspace(0.0, 1.0, n);
  std::vector<RigidTransform3> poses(n);
  for (auto& p : poses) p = random_pose(rng);
  const auto traj = ContinuousTrajectory3::from_poses(times, poses);

  for (int i = 0; i < n; ++i) {
    const auto p = traj.pose(times[i]);
    CHECK((p.translation - poses[i].translation).norm() < 1e-9);
    CHECK(geodesic_angle(p.rotation, poses[i].rotation) < 1e-9);
  }

  // Out-of-range queries clamp to the nearest endpoint.
  const auto lo = traj.pose(-5.0);
  CHECK((lo.translation - poses[0].translation).norm() < 1e-12);
  CHECK(geodesic_angle(traj.pose(99.0).rotation, poses[n - 1].rotation) <
        1e-12);

  // Identical control poses give a constant trajectory.
  const auto fixed = random_pose(rng);
  const auto flat = ContinuousTrajectory3::from_poses(
      times, std::vector<RigidTransform3>(n, fixed));
  for (double t = 0.0; t <= 1.0; t += 0.09) {
    CHECK((flat.position(t) - fixed.translation).norm() < 1e-12);
    CHECK(geodesic_angle(flat.pose(t).rotation, fixed.rotation) < 1e-12);
  }

  CHECK_THROWS_AS(
      ContinuousTrajectory3::from_poses({0.0, 1.0}, {RigidTransform3{}}),
      LengthMismatch);
  CHECK_THROWS_AS(ContinuousTrajectory3::from_poses({}, {}), EmptyInput);
  CHECK_THROWS_AS(ContinuousTrajectory3::from_poses(
                      {0.0, 0.0}, {RigidTransform3{}, RigidTransform3{}}),
                  DegenerateConfiguration);
}

TEST_CASE("planar trajectory interpolates angles the short way around") {
  // 3.0 -> -3.0 should pass through pi, not through zero.
  const auto traj = ContinuousTrajectory2::from_poses(
      {0.0, 1.0}, {{3.0, {0.0, 0.0}}, {-3.0, {1.0, 0.0}}});
  CHECK(traj.pose(0.0).angle == doctest::Approx(3.0));
  CHECK(traj.pose(1.0).angle == doctest::Approx(-3.0));
  CHECK(std::abs(traj.pose(0.5).angle) > 3.0);

  // Control reproduction holds for SE(2) as well.
  Rng rng(5);
  std::vector<double> times = linspace(0.0, 1.0, 6);
  std::vector<RigidTransform2> poses(6);
  for (auto& p : poses)
    p = {rng.uniform(-kPi, kPi), {rng.normal(), rng.normal()}};
  const auto tr = ContinuousTrajectory2::from_poses(times, poses);
  for (int i = 0; i < 6; ++i) {
    CHECK(std::abs(wrap_angle(tr.pose(times[i]).angle - poses[i].angle)) <
          1e-9);
    CHECK((tr.pose(times[i]).translation - poses[i].translation).norm() <
          1e-9);
  }
}

TEST_CASE("planar sampling is seeded, bounded, starts at identity") {
  const PlanarBounds bounds{0.35, 10.0};
  const auto a = sample_planar_trajectory(42, 10, 7, bounds);
  const auto b = sample_planar_trajectory(42, 10, 7, bounds);
  const auto c = sample_planar_trajectory(43, 10, 7, bounds);

  REQUIRE(a.traj.control_poses().size() == 10);
  REQUIRE(a.frame_times.size() == 7);

  // Same seed, same trajectory; different seed, different one.
  bool differs = false;
  for (int i = 0; i < 10; ++i) {
    CHECK(a.traj.control_poses()[i].angle == b.traj.control_poses()[i].angle);
    CHECK(a.traj.control_poses()[i].translation ==
          b.traj.control_poses()[i].translation);
    if (a.traj.control_poses()[i].angle != c.traj.control_poses()[i].angle)
      differs = true;
  }
  CHECK(differs);

  // First control pose is the identity, the rest respect the bounds.
  CHECK(a.traj.control_poses()[0].angle == 0.0);
  CHECK(a.traj.control_poses()[0].translation.norm() == 0.0);
  for (const auto& p : a.traj.control_poses()) {
    CHECK(std::abs(p.angle) <= bounds.max_angle);
    CHECK(std::abs(p.translation.x()) <= bounds.max_shift);
    CHECK(std::abs(p.translation.y()) <= bounds.max_shift);
  }

  // Frame times are uniform on [0, 1].
  for (int i = 0; i < 7; ++i)
    CHECK(a.frame_times[i] == doctest::Approx(i / 6.0));

  CHECK_THROWS_AS(sample_planar_trajectory(1, 1, 7, bounds),
                  DegenerateConfiguration);
}

TEST_CASE("circular orbit geometry") {
  const double r = 2.0;

  SUBCASE("quarter orbit ends at (0, r)") {
    const auto traj = circular_orbit(r, kPi / 2.0, 0.0, 5);
    CHECK((traj.position(0.0) - Eigen::Vector3d(r, 0, 0)).norm() < 1e-12);
    CHECK((traj.position(1.0) - Eigen::Vector3d(0, r, 0)).norm() < 1e-12);
  }

  SUBCASE("camera always faces the origin at control times") {
    const auto traj = circular_orbit(r, 2.0 * kPi, 0.7, 33);
    for (double t : traj.control_times()) {
      const auto pose = traj.pose(t);
      const Eigen::Matrix3d R = pose.rotation.to_matrix();
      const Eigen::Vector3d to_origin = (-pose.translation).normalized();
      CHECK(R.col(2).dot(to_origin) == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(R.determinant() == doctest::Approx(1.0).epsilon(1e-9));
    }
  }

  SUBCASE("z runs a constant-speed triangle cycle") {
    const double amp = 0.7;
    const auto traj = circular_orbit(r, 2.0 * kPi, amp, 5);
    CHECK(traj.position(0.0).z() == doctest::Approx(0.0));
    CHECK(traj.position(0.25).z() == doctest::Approx(amp));
    CHECK(traj.position(0.5).z() == doctest::Approx(0.0));
    CHECK(traj.position(0.75).z() == doctest::Approx(-amp));
    CHECK(traj.position(1.0).z() == doctest::Approx(0.0));
  }

  SUBCASE("full-orbit arc length is 2 pi r") {
    const auto traj = circular_orbit(r, 2.0 * kPi, 0.0, 100);
    double arc = 0.0;
    Eigen::Vector3d prev = traj.position(0.0);
    const int steps = 20000;
    for (int i = 1; i <= steps; ++i) {
      const Eigen::Vector3d p = traj.position(static_cast<double>(i) / steps);
      arc += (p - prev).norm();
      prev = p;
    }
    CHECK(arc == doctest::Approx(2.0 * kPi * r).epsilon(1e-3));
  }

  CHECK_THROWS_AS(circular_orbit(-1.0, 1.0, 0.0, 5), DegenerateConfiguration);
  CHECK_THROWS_AS(circular_orbit(1.0, 1.0, 0.0, 1), DegenerateConfiguration);
}

TEST_CASE("pose noise: zero model returns ground truth") {
  const auto traj = circular_orbit(2.0, 2.0 * kPi, 0.5, 21);
  const auto times = linspace(0.0, 1.0, 50);
  const auto noisy = perturb(traj, times, {0.0, 0.0, 4}, 7);
  REQUIRE(noisy.size() == times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    const auto gt = traj.pose(times[i]);
    CHECK(geodesic_angle(noisy[i].rotation, gt.rotation) < 1e-12);
    CHECK((noisy[i].translation - gt.translation).norm() == 0.0);
  }
}

TEST_CASE("pose noise stays within the configured maxima") {
  const auto traj = circular_orbit(2.0, 2.0 * kPi, 0.5, 21);
  const auto times = linspace(0.0, 1.0, 10000);
  const NoiseModel model{10.0, 0.1, 4};
  const double rot_max = model.rotation_max_deg * kPi / 180.0;
  const double trans_max =
      model.translation_max * trajectory_diameter(traj, times);

  double worst_rot = 0.0, worst_trans = 0.0;
  const auto noisy = perturb(traj, times, model, 123);
  for (std::size_t i = 0; i < times.size(); ++i) {
    const auto gt = traj.pose(times[i]);
    worst_rot = std::max(worst_rot, geodesic_angle(noisy[i].rotation,
                                                   gt.rotation));
    worst_trans =
        std::max(worst_trans, (noisy[i].translation - gt.translation).norm());
  }
  CHECK(worst_rot <= rot_max + 1e-12);
  CHECK(worst_trans <= trans_max + 1e-12);
  // The bound is active, not vacuous: noise actually approaches it.
  CHECK(worst_rot > 0.1 * rot_max);
  CHECK(worst_trans > 0.1 * trans_max);
}

TEST_CASE("pose noise interpolates anchors by slerp and averages shifts") {
  const auto traj = circular_orbit(2.0, kPi, 0.0, 11);
  // Two anchors sit at the ends of the frame range, so the midpoint is the
  // exact halfway point of both interpolants.
  const std::vector<double> times = {0.0, 0.5, 1.0};
  const auto noisy = perturb(traj, times, {20.0, 0.05, 2}, 99);

  std::vector<UnitQuaternion> dq(3);
  std::vector<Eigen::Vector3d> dv(3);
  for (int i = 0; i < 3; ++i) {
    const auto gt = traj.pose(times[i]);
    dq[i] = gt.rotation.inverse() * noisy[i].rotation;
    dv[i] = noisy[i].translation - gt.translation;
  }

  const double full = geodesic_angle(dq[0], dq[2]);
  CHECK(geodesic_angle(dq[0], dq[1]) == doctest::Approx(full / 2).epsilon(1e-9));
  CHECK(geodesic_angle(dq[1], dq[2]) == doctest::Approx(full / 2).epsilon(1e-9));
  CHECK((dv[1] - 0.5 * (dv[0] + dv[2])).norm() < 1e-12);
}

TEST_CASE("pose noise is deterministic per seed and time-correlated") {
  const auto traj = circular_orbit(2.0, 2.0 * kPi, 0.5, 21);
  const auto times = linspace(0.0, 1.0, 100);
  const NoiseModel model{10.0, 0.1, 4};

  const auto n1 = perturb(traj, times, model, 5);
  const auto n2 = perturb(traj, times, model, 5);
  const auto n3 = perturb(traj, times, model, 6);
  bool differs = false;
  for (std::size_t i = 0; i < times.size(); ++i) {
    CHECK(n1[i].translation == n2[i].translation);
    CHECK(n1[i].rotation.coeffs_wxyz() == n2[i].rotation.coeffs_wxyz());
    if ((n1[i].translation - n3[i].translation).norm() > 1e-12) differs = true;
  }
  CHECK(differs);

  // Neighboring frames share interpolated noise, so the per-frame rotation
  // error sequence is strongly autocorrelated, unlike i.i.d. draws.
  double correlated = 0.0;
  const int seeds = 30;
  for (int s = 0; s < seeds; ++s) {
    const auto noisy = perturb(traj, times, model, 1000 + s);
    std::vector<double> angles(times.size());
    for (std::size_t i = 0; i < times.size(); ++i)
      angles[i] = geodesic_angle(noisy[i].rotation, traj.pose(times[i]).rotation);
    correlated += lag1_autocorr(angles);
  }
  correlated /= seeds;

  Rng rng(77);
  double iid = 0.0;
  for (int s = 0; s < seeds; ++s) {
    std::vector<double> angles(times.size());
    for (auto& a : angles) a = rng.uniform(0.0, 0.17);
    iid += lag1_autocorr(angles);
  }
  iid /= seeds;

  CHECK(correlated > 0.8);
  CHECK(iid < 0.3);

  CHECK_THROWS_AS(perturb(traj, times, {10.0, 0.1, 1}, 5),
                  DegenerateConfiguration);
  CHECK_THROWS_AS(perturb(traj, {}, model, 5), EmptyInput);
}

TEST_CASE("trajectory diameter is the largest pairwise distance") {
  std::vector<double> times = {0.0, 1.0, 2.0, 3.0};
  std::vector<RigidTransform3> poses(4);
  poses[0].translation = {0, 0, 0};
  poses[1].translation = {1, 0, 0};
  poses[2].translation = {0, 4, 0};
  poses[3].translation = {0, 0, 2};
  const auto traj = ContinuousTrajectory3::from_poses(times, poses);
  CHECK(trajectory_diameter(traj, times) ==
        doctest::Approx(std::sqrt(20.0)).epsilon(1e-12));
}

TEST_CASE("resample: identity, decimation, and round trip") {
  const auto orbit = circular_orbit(2.0, 2.0 * kPi, 0.5, 21);
  std::vector<TimedPose3> at20;
  for (double t : orbit.control_times()) at20.push_back({t, orbit.pose(t)});

  const auto same = resample(at20, 20.0, 20.0);
  REQUIRE(same.size() == at20.size());
  for (std::size_t i = 0; i < at20.size(); ++i) {
    CHECK(same[i].t == at20[i].t);
    CHECK(same[i].pose.translation == at20[i].pose.translation);
  }

  // Integer-factor downsampling picks input poses untouched.
  const auto at10 = resample(at20, 20.0, 10.0);
  REQUIRE(at10.size() == 11);
  for (std::size_t i = 0; i < at10.size(); ++i) {
    CHECK(at10[i].t == at20[2 * i].t);
    CHECK(at10[i].pose.translation == at20[2 * i].pose.translation);
  }

  // Upsample 10x, decimate 10x, recover the original list.
  const auto at200 = resample(at20, 20.0, 200.0);
  REQUIRE(at200.size() == 201);
  const auto back = resample(at200, 200.0, 20.0);
  REQUIRE(back.size() == at20.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].t == at20[i].t);
    CHECK((back[i].pose.translation - at20[i].pose.translation).norm() < 1e-9);
    CHECK(geodesic_angle(back[i].pose.rotation, at20[i].pose.rotation) < 1e-9);
  }

  CHECK_THROWS_AS(resample({}, 20.0, 10.0), EmptyInput);
  CHECK_THROWS_AS(resample(at20, 20.0, 0.0), DegenerateConfiguration);
}

TEST_CASE("upsampled finite-difference velocity matches the circle") {
  // 40 Hz control points on the unit-time full orbit keep the spline's
  // derivative error well under the finite-difference tolerance.
  const double r = 2.0;
  const auto orbit = circular_orbit(r, 2.0 * kPi, 0.0, 41);
  std::vector<TimedPose3> at40;
  for (double t : orbit.control_times()) at40.push_back({t, orbit.pose(t)});

  const auto fine = resample(at40, 40.0, 200.0);
  REQUIRE(fine.size() == 201);
  const double speed = 2.0 * kPi * r;
  for (std::size_t i = 20; i + 20 < fine.size(); ++i) {
    const Eigen::Vector3d fd = (fine[i + 1].pose.translation -
                                fine[i - 1].pose.translation) *
                               (200.0 / 2.0);
    const double th = 2.0 * kPi * fine[i].t;
    const Eigen::Vector3d analytic =
        speed * Eigen::Vector3d(-std::sin(th), std::cos(th), 0.0);
    CHECK((fd - analytic).norm() < 1e-3 * speed);
  }
}

TEST_CASE("trajectory text files round-trip") {
  const auto dir = std::filesystem::temp_directory_path();
  const auto path = (dir / "contpose_test_traj.txt").string();

  Rng rng(31);
  std::vector<TimedPose3> poses;
  for (int i = 0; i < 25; ++i)
    poses.push_back({0.05 * i, random_pose(rng)});

  save_tum(path, poses);
  const auto loaded = load_tum(path);
  REQUIRE(loaded.size() == poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i) {
    CHECK(loaded[i].t == poses[i].t);
    CHECK(loaded[i].pose.translation == poses[i].pose.translation);
    CHECK(geodesic_angle(loaded[i].pose.rotation, poses[i].pose.rotation) <
          1e-15);
  }

  // Comment lines are skipped; malformed lines are an error.
  {
    std::ofstream out(path);
    out << "# comment line\n";
    out << "0 1 2 3 0 0 0 1\n";
  }
  CHECK(load_tum(path).size() == 1);
  {
    std::ofstream out(path);
    out << "0.0 1.0 2.0\n";
  }
  CHECK_THROWS_AS(load_tum(path), IoError);
  CHECK_THROWS_AS(load_tum((dir / "contpose_no_such_file").string()), IoError);
  std::filesystem::remove(path);
}
