#pragma once

#include <Eigen/Dense>

namespace contpose {

// Clamped uniform B-spline curve fit by penalized least squares:
//   min ||B c - y||^2 + s ||D2 c||^2
// with D2 the second difference of the coefficient sequence, so s = 0 is a
// plain least-squares (interpolating when the system is square) fit.
struct BsplineCurve {
  int degree = 3;
  Eigen::VectorXd knots;   // full knot vector with clamped ends
  Eigen::MatrixXd coeffs;  // n_basis x dims
};

// n_knots counts distinct uniform knot sites (endpoints included) over the
// time range, so the basis has n_knots + degree - 1 functions. values is
// n_data x dims. Throws SingularFit when the system is rank-deficient and
// ShapeMismatch/DegenerateConfiguration on malformed input.
BsplineCurve bspline_fit(const Eigen::VectorXd& times,
                         const Eigen::MatrixXd& values, int n_knots,
                         int degree = 3, double smoothing = 0.0);

Eigen::VectorXd bspline_eval(const BsplineCurve& curve, double t);

// All basis function values at t (Cox-de Boor); exposed for the fit oracle.
Eigen::VectorXd bspline_basis(const Eigen::VectorXd& knots, int degree,
                              double t);

}  // namespace contpose
