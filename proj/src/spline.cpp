#include "spline.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"

namespace contpose {

CubicSpline::CubicSpline(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
  if (x_.empty() || x_.size() != y_.size())
    throw LengthMismatch("spline needs matching nonempty knots and values");
  for (std::size_t i = 1; i < x_.size(); ++i)
    if (x_[i] <= x_[i - 1])
      throw DegenerateConfiguration("spline knots must strictly increase");

  const std::size_t n = x_.size();
  m_.assign(n, 0.0);
  if (n < 3) return;  // natural spline with <3 points is linear/constant

  // Tridiagonal system for interior second derivatives (Thomas algorithm).
  std::vector<double> diag(n, 0.0), rhs(n, 0.0), upper(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = x_[i] - x_[i - 1];
    const double h1 = x_[i + 1] - x_[i];
    diag[i] = 2.0 * (h0 + h1);
    upper[i] = h1;
    rhs[i] = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
  }
  for (std::size_t i = 2; i + 1 < n; ++i) {
    const double h0 = x_[i] - x_[i - 1];  // lower coefficient of row i
    const double w = h0 / diag[i - 1];
    diag[i] -= w * upper[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  for (std::size_t i = n - 2; i >= 1; --i) {
    m_[i] = (rhs[i] - upper[i] * m_[i + 1]) / diag[i];
    if (i == 1) break;
  }
}

int CubicSpline::segment(double t) const {
  const auto it = std::upper_bound(x_.begin(), x_.end(), t);
  const auto idx = std::clamp<std::ptrdiff_t>(it - x_.begin() - 1, 0,
                                              static_cast<std::ptrdiff_t>(
                                                  x_.size()) - 2);
  return static_cast<int>(idx);
}

double CubicSpline::eval(double t) const {
  if (x_.size() == 1) return y_[0];
  t = std::clamp(t, x_.front(), x_.back());
  const int i = segment(t);
  const double h = x_[i + 1] - x_[i];
  const double a = (x_[i + 1] - t) / h;
  const double b = (t - x_[i]) / h;
  return a * y_[i] + b * y_[i + 1] +
         ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
}

double CubicSpline::deriv(double t) const {
  if (x_.size() == 1) return 0.0;
  t = std::clamp(t, x_.front(), x_.back());
  const int i = segment(t);
  const double h = x_[i + 1] - x_[i];
  const double a = (x_[i + 1] - t) / h;
  const double b = (t - x_[i]) / h;
  return (y_[i + 1] - y_[i]) / h +
         ((1.0 - 3.0 * a * a) * m_[i] + (3.0 * b * b - 1.0) * m_[i + 1]) * h /
             6.0;
}

double CubicSpline::second_deriv(double t) const {
  if (x_.size() == 1) return 0.0;
  t = std::clamp(t, x_.front(), x_.back());
  const int i = segment(t);
  const double h = x_[i + 1] - x_[i];
  const double a = (x_[i + 1] - t) / h;
  const double b = (t - x_[i]) / h;
  return a * m_[i] + b * m_[i + 1];
}

}  // namespace contpose
