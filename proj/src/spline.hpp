#pragma once

#include <vector>

namespace contpose {

// Natural cubic spline through (x, y) with zero second derivative at both
// ends. Evaluation clamps to the knot range. Two points degrade to a line,
// one point to a constant.
class CubicSpline {
public:
  CubicSpline() = default;
  CubicSpline(std::vector<double> x, std::vector<double> y);

  double eval(double t) const;
  double deriv(double t) const;
  double second_deriv(double t) const;

  double t_min() const { return x_.front(); }
  double t_max() const { return x_.back(); }

private:
  int segment(double t) const;
  std::vector<double> x_, y_, m_;  // knots, values, second derivatives
};

}  // namespace contpose
