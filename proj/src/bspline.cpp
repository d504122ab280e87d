#include "bspline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "errors.hpp"

namespace contpose {

namespace {

Eigen::VectorXd clamped_uniform_knots(double t0, double t1, int n_knots,
                                      int degree) {
  // degree+1 copies of each endpoint, interior sites evenly spaced.
  const int interior = n_knots - 2;
  Eigen::VectorXd knots(2 * (degree + 1) + interior);
  int k = 0;
  for (int i = 0; i <= degree; ++i) knots(k++) = t0;
  for (int i = 1; i <= interior; ++i)
    knots(k++) = t0 + (t1 - t0) * static_cast<double>(i) / (n_knots - 1);
  for (int i = 0; i <= degree; ++i) knots(k++) = t1;
  return knots;
}

}  // namespace

Eigen::VectorXd bspline_basis(const Eigen::VectorXd& knots, int degree,
                              double t) {
  const int n_basis = static_cast<int>(knots.size()) - degree - 1;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n_basis);

  // Degree 0: indicator of the containing half-open span. t at the very end
  // of the range falls into the last non-empty span so it stays representable.
  int span = -1;
  for (int i = 0; i < n_basis; ++i) {
    if (t >= knots(i) && t < knots(i + 1)) {
      span = i;
      break;
    }
  }
  if (span < 0 && t == knots(knots.size() - 1)) {
    for (int i = n_basis - 1; i >= 0; --i) {
      if (knots(i) < knots(i + 1)) {
        span = i;
        break;
      }
    }
  }
  if (span < 0) return b;  // outside the knot range
  b(span) = 1.0;

  // Cox-de Boor recursion, in place. Ascending i only reads b(i) and b(i+1)
  // from the previous degree; 0/0 terms are dropped. Basis functions with
  // index >= n_basis live on degenerate end spans and are identically zero,
  // so truncating the array to n_basis entries loses nothing.
  for (int d = 1; d <= degree; ++d) {
    for (int i = 0; i < n_basis; ++i) {
      double acc = 0.0;
      const double den_l = knots(i + d) - knots(i);
      if (den_l > 0.0) acc += (t - knots(i)) / den_l * b(i);
      const double den_r = knots(i + d + 1) - knots(i + 1);
      if (den_r > 0.0 && i + 1 < n_basis)
        acc += (knots(i + d + 1) - t) / den_r * b(i + 1);
      b(i) = acc;
    }
  }
  return b;
}

BsplineCurve bspline_fit(const Eigen::VectorXd& times,
                         const Eigen::MatrixXd& values, int n_knots,
                         int degree, double smoothing) {
  if (times.size() != values.rows())
    throw ShapeMismatch("bspline_fit: times/values row mismatch");
  if (times.size() == 0) throw EmptyInput("bspline_fit: no data");
  if (degree < 1) throw DegenerateConfiguration("bspline_fit: degree < 1");
  if (n_knots < 2) throw DegenerateConfiguration("bspline_fit: n_knots < 2");
  if (smoothing < 0.0)
    throw DegenerateConfiguration("bspline_fit: negative smoothing");

  const double t0 = times.minCoeff();
  const double t1 = times.maxCoeff();
  if (!(t1 > t0))
    throw DegenerateConfiguration("bspline_fit: degenerate time range");

  BsplineCurve curve;
  curve.degree = degree;
  curve.knots = clamped_uniform_knots(t0, t1, n_knots, degree);
  const int n_basis = n_knots + degree - 1;

  Eigen::MatrixXd B(times.size(), n_basis);
  for (int r = 0; r < times.size(); ++r)
    B.row(r) = bspline_basis(curve.knots, degree, times(r)).transpose();

  // Normal matrix with an optional second-difference roughness penalty.
  Eigen::MatrixXd A = B.transpose() * B;
  if (smoothing > 0.0 && n_basis >= 3) {
    Eigen::MatrixXd D2 = Eigen::MatrixXd::Zero(n_basis - 2, n_basis);
    for (int i = 0; i < n_basis - 2; ++i) {
      D2(i, i) = 1.0;
      D2(i, i + 1) = -2.0;
      D2(i, i + 2) = 1.0;
    }
    A += smoothing * D2.transpose() * D2;
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  if (qr.rank() < n_basis)
    throw SingularFit("bspline_fit: rank-deficient system (rank " +
                      std::to_string(qr.rank()) + " of " +
                      std::to_string(n_basis) + ")");
  curve.coeffs = qr.solve(B.transpose() * values);
  return curve;
}

Eigen::VectorXd bspline_eval(const BsplineCurve& curve, double t) {
  const double t0 = curve.knots(0);
  const double t1 = curve.knots(curve.knots.size() - 1);
  const double tc = std::clamp(t, t0, t1);
  const Eigen::VectorXd b = bspline_basis(curve.knots, curve.degree, tc);
  return curve.coeffs.transpose() * b;
}

}  // namespace contpose
