#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <vector>

#include "errors.hpp"

namespace contpose::ad {

// Scalar reverse-mode tape. Meant for the small "loss head" computations that
// sit on top of the batched MLP passes (quaternion algebra, norms, L1 terms),
// not for whole-network backprop — the MLP has its own batched reverse pass.
class Tape {
public:
  struct Node {
    int p0 = -1, p1 = -1;
    double w0 = 0.0, w1 = 0.0;
  };

  int add_leaf() {
    nodes_.push_back({});
    return static_cast<int>(nodes_.size()) - 1;
  }

  int add_unary(int p, double w) {
    nodes_.push_back({p, -1, w, 0.0});
    return static_cast<int>(nodes_.size()) - 1;
  }

  int add_binary(int p0, int p1, double w0, double w1) {
    nodes_.push_back({p0, p1, w0, w1});
    return static_cast<int>(nodes_.size()) - 1;
  }

  std::size_t size() const { return nodes_.size(); }

  void clear() { nodes_.clear(); }

  // Adjoints of every node with respect to the node `output`.
  std::vector<double> gradient(int output) const {
    std::vector<double> adj(nodes_.size(), 0.0);
    assert(output >= 0 && output < static_cast<int>(nodes_.size()));
    adj[output] = 1.0;
    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
      const double a = adj[i];
      if (a == 0.0) continue;
      const Node& n = nodes_[i];
      if (n.p0 >= 0) adj[n.p0] += n.w0 * a;
      if (n.p1 >= 0) adj[n.p1] += n.w1 * a;
    }
    return adj;
  }

private:
  std::vector<Node> nodes_;
};

// Value plus tape index. Cheap to copy; arithmetic records onto the tape.
struct Var {
  Tape* tape = nullptr;
  int idx = -1;
  double v = 0.0;
};

inline Var make_leaf(Tape& t, double value) { return {&t, t.add_leaf(), value}; }

// Constant: recorded as a parentless node so mixed expressions stay uniform.
inline Var make_const(Tape& t, double value) { return {&t, t.add_leaf(), value}; }

inline Var operator+(Var a, Var b) {
  return {a.tape, a.tape->add_binary(a.idx, b.idx, 1.0, 1.0), a.v + b.v};
}
inline Var operator-(Var a, Var b) {
  return {a.tape, a.tape->add_binary(a.idx, b.idx, 1.0, -1.0), a.v - b.v};
}
inline Var operator*(Var a, Var b) {
  return {a.tape, a.tape->add_binary(a.idx, b.idx, b.v, a.v), a.v * b.v};
}
inline Var operator/(Var a, Var b) {
  const double inv = 1.0 / b.v;
  return {a.tape, a.tape->add_binary(a.idx, b.idx, inv, -a.v * inv * inv),
          a.v * inv};
}
inline Var operator-(Var a) {
  return {a.tape, a.tape->add_unary(a.idx, -1.0), -a.v};
}

inline Var operator+(Var a, double c) {
  return {a.tape, a.tape->add_unary(a.idx, 1.0), a.v + c};
}
inline Var operator+(double c, Var a) { return a + c; }
inline Var operator-(Var a, double c) { return a + (-c); }
inline Var operator-(double c, Var a) {
  return {a.tape, a.tape->add_unary(a.idx, -1.0), c - a.v};
}
inline Var operator*(Var a, double c) {
  return {a.tape, a.tape->add_unary(a.idx, c), a.v * c};
}
inline Var operator*(double c, Var a) { return a * c; }
inline Var operator/(Var a, double c) { return a * (1.0 / c); }
inline Var operator/(double c, Var a) {
  return {a.tape, a.tape->add_unary(a.idx, -c / (a.v * a.v)), c / a.v};
}

inline Var sin(Var a) {
  return {a.tape, a.tape->add_unary(a.idx, std::cos(a.v)), std::sin(a.v)};
}
inline Var cos(Var a) {
  return {a.tape, a.tape->add_unary(a.idx, -std::sin(a.v)), std::cos(a.v)};
}
inline Var tanh(Var a) {
  const double t = std::tanh(a.v);
  return {a.tape, a.tape->add_unary(a.idx, 1.0 - t * t), t};
}
inline Var exp(Var a) {
  const double e = std::exp(a.v);
  return {a.tape, a.tape->add_unary(a.idx, e), e};
}
inline Var log(Var a) {
  return {a.tape, a.tape->add_unary(a.idx, 1.0 / a.v), std::log(a.v)};
}
inline Var sqrt(Var a) {
  const double s = std::sqrt(a.v);
  return {a.tape, a.tape->add_unary(a.idx, 0.5 / s), s};
}
inline Var sq(Var a) {
  return {a.tape, a.tape->add_unary(a.idx, 2.0 * a.v), a.v * a.v};
}

// Subgradient at 0 taken as 0.
inline Var abs(Var a) {
  const double s = a.v > 0.0 ? 1.0 : (a.v < 0.0 ? -1.0 : 0.0);
  return {a.tape, a.tape->add_unary(a.idx, s), std::abs(a.v)};
}

// asin with the argument clamped away from +-1; the derivative blows up at
// the clamp boundary and gets zeroed there instead (DOF loss near gimbal
// lock is a measure-zero configuration).
inline Var asin_clamped(Var a) {
  constexpr double kLim = 1.0 - 1e-12;
  if (a.v >= kLim)
    return {a.tape, a.tape->add_unary(a.idx, 0.0), std::asin(kLim)};
  if (a.v <= -kLim)
    return {a.tape, a.tape->add_unary(a.idx, 0.0), std::asin(-kLim)};
  const double d = 1.0 / std::sqrt(1.0 - a.v * a.v);
  return {a.tape, a.tape->add_unary(a.idx, d), std::asin(a.v)};
}

inline Var atan2(Var y, Var x) {
  const double r2 = x.v * x.v + y.v * y.v;
  return {y.tape, y.tape->add_binary(y.idx, x.idx, x.v / r2, -y.v / r2),
          std::atan2(y.v, x.v)};
}

// Branch by value; gradients follow the selected branch.
inline Var min(Var a, Var b) { return a.v <= b.v ? a : b; }
inline Var max(Var a, Var b) { return a.v >= b.v ? a : b; }

}  // namespace contpose::ad
