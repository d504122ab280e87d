#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "bspline.hpp"
#include "errors.hpp"
#include "rng.hpp"

using namespace contpose;

namespace {

// Textbook recursive Cox-de Boor evaluation, kept deliberately naive as a
// reference for the iterative production version.
double basis_recursive(const Eigen::VectorXd& K, int i, int d, double t) {
  const double t_max = K(K.size() - 1);
  if (d == 0) {
    if (t >= K(i) && t < K(i + 1)) return 1.0;
    if (t == t_max && K(i) < K(i + 1) && K(i + 1) == t_max) return 1.0;
    return 0.0;
  }
  double acc = 0.0;
  if (K(i + d) > K(i))
    acc += (t - K(i)) / (K(i + d) - K(i)) * basis_recursive(K, i, d - 1, t);
  if (K(i + d + 1) > K(i + 1))
    acc += (K(i + d + 1) - t) / (K(i + d + 1) - K(i + 1)) *
           basis_recursive(K, i + 1, d - 1, t);
  return acc;
}

Eigen::VectorXd fit_times(int n, double t0, double t1, Rng& rng) {
  Eigen::VectorXd t(n);
  for (int i = 0; i < n; ++i)
    t(i) = t0 + (t1 - t0) * i / (n - 1) + (i > 0 && i + 1 < n
                                               ? rng.uniform(-0.01, 0.01)
                                               : 0.0);
  return t;
}

}  // namespace

TEST_CASE("basis matches the recursive definition and sums to one") {
  Rng rng(3);
  for (int degree : {1, 2, 3, 4}) {
    const auto curve = bspline_fit(fit_times(30, 0.0, 2.0, rng),
                                   Eigen::MatrixXd::Random(30, 1), 6, degree);
    const int n_basis = static_cast<int>(curve.coeffs.rows());
    for (int k = 0; k < 50; ++k) {
      const double t = k == 0 ? 2.0 : rng.uniform(0.0, 2.0);
      const Eigen::VectorXd b = bspline_basis(curve.knots, degree, t);
      REQUIRE(b.size() == n_basis);
      double sum = 0.0;
      for (int i = 0; i < n_basis; ++i) {
        CHECK(b(i) ==
              doctest::Approx(basis_recursive(curve.knots, i, degree, t))
                  .epsilon(1e-12));
        CHECK(b(i) >= 0.0);
        sum += b(i);
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("degree-3 fit reproduces cubic polynomials exactly") {
  // The clamped cubic spline space contains every global cubic, so an
  // unsmoothed least-squares fit must recover it to solver precision.
  Rng rng(17);
  const auto poly = [](double t) {
    return 2.0 * t * t * t - 3.0 * t * t + t - 5.0;
  };
  const Eigen::VectorXd times = fit_times(40, 0.0, 2.0, rng);
  Eigen::MatrixXd values(40, 1);
  for (int i = 0; i < 40; ++i) values(i, 0) = poly(times(i));

  const auto curve = bspline_fit(times, values, 6, 3, 0.0);
  for (int k = 0; k < 100; ++k) {
    const double t = rng.uniform(0.0, 2.0);
    CHECK(bspline_eval(curve, t)(0) == doctest::Approx(poly(t)).epsilon(1e-9));
  }
  CHECK(bspline_eval(curve, 0.0)(0) == doctest::Approx(poly(0.0)).epsilon(1e-9));
  CHECK(bspline_eval(curve, 2.0)(0) == doctest::Approx(poly(2.0)).epsilon(1e-9));
}

TEST_CASE("degree-2 fit reproduces quadratics exactly") {
  Rng rng(19);
  const Eigen::VectorXd times = fit_times(30, -1.0, 1.0, rng);
  Eigen::MatrixXd values(30, 1);
  for (int i = 0; i < 30; ++i)
    values(i, 0) = 0.5 * times(i) * times(i) - times(i) + 0.25;
  const auto curve = bspline_fit(times, values, 5, 2, 0.0);
  for (int k = 0; k < 50; ++k) {
    const double t = rng.uniform(-1.0, 1.0);
    CHECK(bspline_eval(curve, t)(0) ==
          doctest::Approx(0.5 * t * t - t + 0.25).epsilon(1e-9));
  }
}

TEST_CASE("constant data gives a constant curve per dimension") {
  Rng rng(23);
  const Eigen::VectorXd times = fit_times(20, 0.0, 1.0, rng);
  Eigen::MatrixXd values(20, 2);
  values.col(0).setConstant(7.5);
  values.col(1).setConstant(-2.25);
  const auto curve = bspline_fit(times, values, 5, 3, 0.0);
  for (int k = 0; k < 30; ++k) {
    const Eigen::VectorXd v = bspline_eval(curve, rng.uniform(0.0, 1.0));
    CHECK(v(0) == doctest::Approx(7.5).epsilon(1e-10));
    CHECK(v(1) == doctest::Approx(-2.25).epsilon(1e-10));
  }
}

TEST_CASE("smoothing fit matches a dense normal-equations oracle") {
  Rng rng(29);
  const int n = 60;
  const Eigen::VectorXd times = fit_times(n, 0.0, 3.0, rng);
  Eigen::MatrixXd values(n, 1);
  for (int i = 0; i < n; ++i)
    values(i, 0) = std::sin(2.0 * times(i)) + 0.1 * rng.normal();

  const double s = 1e-3;
  const auto curve = bspline_fit(times, values, 10, 3, s);
  const int n_basis = static_cast<int>(curve.coeffs.rows());

  // Oracle: rebuild the design matrix from the recursive basis and solve the
  // penalized normal equations with a different factorization.
  Eigen::MatrixXd B(n, n_basis);
  for (int r = 0; r < n; ++r)
    for (int i = 0; i < n_basis; ++i)
      B(r, i) = basis_recursive(curve.knots, i, 3, times(r));
  Eigen::MatrixXd D2 = Eigen::MatrixXd::Zero(n_basis - 2, n_basis);
  for (int i = 0; i < n_basis - 2; ++i) {
    D2(i, i) = 1.0;
    D2(i, i + 1) = -2.0;
    D2(i, i + 2) = 1.0;
  }
  const Eigen::MatrixXd A = B.transpose() * B + s * D2.transpose() * D2;
  const Eigen::VectorXd ref =
      A.ldlt().solve(B.transpose() * values.col(0));

  CHECK((curve.coeffs.col(0) - ref).norm() < 1e-8);

  // Residuals agree too, which is what the coefficients feed into.
  const double res_fit = (B * curve.coeffs.col(0) - values.col(0)).norm();
  const double res_ref = (B * ref - values.col(0)).norm();
  CHECK(res_fit == doctest::Approx(res_ref).epsilon(1e-8));
}

TEST_CASE("strong smoothing flattens the coefficient sequence") {
  Rng rng(31);
  const int n = 50;
  const Eigen::VectorXd times = fit_times(n, 0.0, 1.0, rng);
  Eigen::MatrixXd values(n, 1);
  for (int i = 0; i < n; ++i) values(i, 0) = rng.normal(0.0, 1.0);

  const auto rough = bspline_fit(times, values, 8, 3, 0.0);
  const auto smooth = bspline_fit(times, values, 8, 3, 1e6);
  const auto second_diff_norm = [](const Eigen::MatrixXd& c) {
    double out = 0.0;
    for (int i = 0; i + 2 < c.rows(); ++i)
      out += std::pow(c(i, 0) - 2.0 * c(i + 1, 0) + c(i + 2, 0), 2.0);
    return std::sqrt(out);
  };
  CHECK(second_diff_norm(smooth.coeffs) < 1e-3);
  CHECK(second_diff_norm(smooth.coeffs) < second_diff_norm(rough.coeffs));
}

TEST_CASE("rank-deficient systems are rejected, smoothing regularizes") {
  // 3 samples cannot pin down 8 cubic basis coefficients without a penalty.
  Eigen::VectorXd times(3);
  times << 0.0, 0.5, 1.0;
  Eigen::MatrixXd values(3, 1);
  values << 1.0, 2.0, 3.0;
  CHECK_THROWS_AS(bspline_fit(times, values, 6, 3, 0.0), SingularFit);

  const auto curve = bspline_fit(times, values, 6, 3, 1.0);
  CHECK(std::isfinite(bspline_eval(curve, 0.3)(0)));
}

TEST_CASE("fit input validation") {
  Eigen::VectorXd times(4);
  times << 0.0, 0.1, 0.2, 0.3;
  const Eigen::MatrixXd values = Eigen::MatrixXd::Zero(4, 1);

  CHECK_THROWS_AS(bspline_fit(times, Eigen::MatrixXd::Zero(3, 1), 4, 3),
                  ShapeMismatch);
  CHECK_THROWS_AS(bspline_fit(Eigen::VectorXd(), Eigen::MatrixXd(), 4, 3),
                  EmptyInput);
  CHECK_THROWS_AS(bspline_fit(times, values, 1, 3), DegenerateConfiguration);
  CHECK_THROWS_AS(bspline_fit(times, values, 4, 0), DegenerateConfiguration);
  CHECK_THROWS_AS(bspline_fit(times, values, 4, 3, -1.0),
                  DegenerateConfiguration);
  CHECK_THROWS_AS(
      bspline_fit(Eigen::VectorXd::Zero(4), values, 4, 3),
      DegenerateConfiguration);

  // Evaluation clamps to the fitted range.
  Rng rng(37);
  const auto curve =
      bspline_fit(fit_times(20, 0.0, 1.0, rng), Eigen::MatrixXd::Random(20, 1),
                  5, 3, 0.0);
  CHECK(bspline_eval(curve, -1.0)(0) ==
        doctest::Approx(bspline_eval(curve, 0.0)(0)));
  CHECK(bspline_eval(curve, 2.0)(0) ==
        doctest::Approx(bspline_eval(curve, 1.0)(0)));
}
