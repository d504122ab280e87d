#pragma once

#include <Eigen/Dense>
#include <vector>

#include "encoding.hpp"
#include "rng.hpp"

namespace contpose {

enum class Activation { relu, sigmoid };

// Fully connected net: hidden layers of equal width with the chosen
// activation, then a linear head. Batches are columns.
struct Mlp {
  std::vector<Eigen::MatrixXd> w;  // w[l] is out x in
  std::vector<Eigen::VectorXd> b;
  Activation act = Activation::relu;

  int n_layers() const { return static_cast<int>(w.size()); }
  int in_dim() const { return static_cast<int>(w.front().cols()); }
  int out_dim() const { return static_cast<int>(w.back().rows()); }

  // hidden_layers >= 1; He-uniform init for relu, Xavier for sigmoid,
  // biases zero. Deterministic given the rng state.
  static Mlp create(int in_dim, int width, int hidden_layers, int out_dim,
                    Activation act, Rng& rng);
};

struct MlpGrads {
  std::vector<Eigen::MatrixXd> w;
  std::vector<Eigen::VectorXd> b;

  static MlpGrads like(const Mlp& m);
  void zero();
};

// dst += s * src, for mixing separately weighted loss gradients.
void add_scaled(MlpGrads& dst, const MlpGrads& src, double s);

// Cached state of one batched forward pass, consumed by backward. Index 0
// holds values, 1 and 2 the first/second time derivatives carried through
// the net (forward-mode, exact).
struct MlpWorkspace {
  int order = 0;
  std::vector<Eigen::MatrixXd> h[3];  // input to each layer
  std::vector<Eigen::MatrixXd> z[3];  // hidden pre-activations
  std::vector<Eigen::MatrixXd> s;     // activation values (sigmoid) or masks
  Eigen::MatrixXd y[3];               // head outputs
};

// X1/X2 are the derivatives of the input columns with respect to the scalar
// being differentiated (time); pass nullptr for a plain value pass.
void mlp_forward(const Mlp& m, const Eigen::MatrixXd& X0,
                 const Eigen::MatrixXd* X1, const Eigen::MatrixXd* X2,
                 MlpWorkspace& ws);

// Accumulates parameter gradients given adjoints of y[0..order]. Null seed
// means zero. Xbar*, when given, receive adjoints of the inputs (needed to
// chain through warps). Throws ShapeMismatch on inconsistent seeds.
void mlp_backward(const Mlp& m, const MlpWorkspace& ws,
                  const Eigen::MatrixXd* Ybar0, const Eigen::MatrixXd* Ybar1,
                  const Eigen::MatrixXd* Ybar2, MlpGrads& g,
                  Eigen::MatrixXd* Xbar0 = nullptr,
                  Eigen::MatrixXd* Xbar1 = nullptr,
                  Eigen::MatrixXd* Xbar2 = nullptr);

// Convenience single-time evaluation through an encoding.
Eigen::VectorXd forward_time(const Mlp& m, const EncodingConfig& cfg, double t);

// Exact first and second derivatives of every output w.r.t. t.
void time_derivatives(const Mlp& m, const EncodingConfig& cfg, double t,
                      Eigen::VectorXd& y, Eigen::VectorXd& dy,
                      Eigen::VectorXd& d2y);

struct AdamState {
  std::vector<Eigen::MatrixXd> mw, vw;
  std::vector<Eigen::VectorXd> mb, vb;
  long step = 0;

  static AdamState like(const Mlp& m);
};

void adam_step(Mlp& m, const MlpGrads& g, AdamState& st, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

struct LrSchedule {
  double initial = 1e-3;
  double final = 1e-5;
  long total_steps = 1;

  double at(long step) const;
};

}  // namespace contpose
