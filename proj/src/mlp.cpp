#include "mlp.hpp"

#include <cmath>

#include "errors.hpp"

namespace contpose {

Mlp Mlp::create(int in_dim, int width, int hidden_layers, int out_dim,
                Activation act, Rng& rng) {
  if (in_dim < 1 || width < 1 || hidden_layers < 1 || out_dim < 1)
    throw ShapeMismatch("mlp dimensions must be positive");
  Mlp m;
  m.act = act;
  int fan_in = in_dim;
  for (int l = 0; l <= hidden_layers; ++l) {
    const int fan_out = (l == hidden_layers) ? out_dim : width;
    // He-uniform suits relu; Xavier keeps sigmoid pre-activations in range.
    const double limit = act == Activation::relu
                             ? std::sqrt(6.0 / fan_in)
                             : std::sqrt(6.0 / (fan_in + fan_out));
    Eigen::MatrixXd W(fan_out, fan_in);
    for (Eigen::Index j = 0; j < W.cols(); ++j)
      for (Eigen::Index i = 0; i < W.rows(); ++i)
        W(i, j) = rng.uniform(-limit, limit);
    m.w.push_back(std::move(W));
    m.b.push_back(Eigen::VectorXd::Zero(fan_out));
    fan_in = fan_out;
  }
  return m;
}

MlpGrads MlpGrads::like(const Mlp& m) {
  MlpGrads g;
  for (std::size_t l = 0; l < m.w.size(); ++l) {
    g.w.push_back(Eigen::MatrixXd::Zero(m.w[l].rows(), m.w[l].cols()));
    g.b.push_back(Eigen::VectorXd::Zero(m.b[l].size()));
  }
  return g;
}

void MlpGrads::zero() {
  for (auto& W : w) W.setZero();
  for (auto& B : b) B.setZero();
}

void add_scaled(MlpGrads& dst, const MlpGrads& src, double s) {
  for (std::size_t l = 0; l < dst.w.size(); ++l) {
    dst.w[l] += s * src.w[l];
    dst.b[l] += s * src.b[l];
  }
}

namespace {

inline int order_of(const Eigen::MatrixXd* X1, const Eigen::MatrixXd* X2) {
  if (X2) return 2;
  if (X1) return 1;
  return 0;
}

}  // namespace

void mlp_forward(const Mlp& m, const Eigen::MatrixXd& X0,
                 const Eigen::MatrixXd* X1, const Eigen::MatrixXd* X2,
                 MlpWorkspace& ws) {
  if (X0.rows() != m.in_dim())
    throw ShapeMismatch("mlp input rows do not match first layer");
  if (X2 && !X1) throw ShapeMismatch("second order requires first order");
  const int L = m.n_layers();
  const int hidden = L - 1;
  ws.order = order_of(X1, X2);
  for (int k = 0; k < 3; ++k) {
    ws.h[k].resize(L);
    ws.z[k].resize(hidden);
  }
  ws.s.resize(hidden);

  ws.h[0][0] = X0;
  if (X1) ws.h[1][0] = *X1;
  if (X2) ws.h[2][0] = *X2;

  for (int l = 0; l < hidden; ++l) {
    auto& z0 = ws.z[0][l];
    z0.noalias() = m.w[l] * ws.h[0][l];
    z0.colwise() += m.b[l];
    if (ws.order >= 1) ws.z[1][l].noalias() = m.w[l] * ws.h[1][l];
    if (ws.order >= 2) ws.z[2][l].noalias() = m.w[l] * ws.h[2][l];

    auto& s = ws.s[l];
    if (m.act == Activation::relu) {
      s = (z0.array() > 0.0).cast<double>().matrix();
      ws.h[0][l + 1] = z0.cwiseProduct(s);
      if (ws.order >= 1) ws.h[1][l + 1] = ws.z[1][l].cwiseProduct(s);
      if (ws.order >= 2) ws.h[2][l + 1] = ws.z[2][l].cwiseProduct(s);
    } else {
      s = (1.0 + (-z0.array()).exp()).inverse().matrix();
      ws.h[0][l + 1] = s;
      if (ws.order >= 1) {
        const auto d1 = s.array() * (1.0 - s.array());  // sigma'
        ws.h[1][l + 1] = (d1 * ws.z[1][l].array()).matrix();
        if (ws.order >= 2) {
          const auto d2 = d1 * (1.0 - 2.0 * s.array());  // sigma''
          ws.h[2][l + 1] = (d2 * ws.z[1][l].array().square() +
                            d1 * ws.z[2][l].array())
                               .matrix();
        }
      }
    }
  }

  ws.y[0].noalias() = m.w[L - 1] * ws.h[0][L - 1];
  ws.y[0].colwise() += m.b[L - 1];
  if (ws.order >= 1) ws.y[1].noalias() = m.w[L - 1] * ws.h[1][L - 1];
  if (ws.order >= 2) ws.y[2].noalias() = m.w[L - 1] * ws.h[2][L - 1];
}

void mlp_backward(const Mlp& m, const MlpWorkspace& ws,
                  const Eigen::MatrixXd* Ybar0, const Eigen::MatrixXd* Ybar1,
                  const Eigen::MatrixXd* Ybar2, MlpGrads& g,
                  Eigen::MatrixXd* Xbar0, Eigen::MatrixXd* Xbar1,
                  Eigen::MatrixXd* Xbar2) {
  const int L = m.n_layers();
  const int hidden = L - 1;
  const auto batch = ws.h[0][0].cols();
  if ((Ybar1 && ws.order < 1) || (Ybar2 && ws.order < 2))
    throw ShapeMismatch("seed order exceeds forward order");

  // Adjoints of the current layer's outputs, one matrix per carried order.
  Eigen::MatrixXd a0 = Ybar0 ? *Ybar0 : Eigen::MatrixXd::Zero(m.out_dim(), batch);
  Eigen::MatrixXd a1, a2;
  if (ws.order >= 1)
    a1 = Ybar1 ? *Ybar1 : Eigen::MatrixXd::Zero(m.out_dim(), batch);
  if (ws.order >= 2)
    a2 = Ybar2 ? *Ybar2 : Eigen::MatrixXd::Zero(m.out_dim(), batch);
  if (a0.rows() != m.out_dim() || a0.cols() != batch ||
      (ws.order >= 1 && (a1.rows() != m.out_dim() || a1.cols() != batch)) ||
      (ws.order >= 2 && (a2.rows() != m.out_dim() || a2.cols() != batch)))
    throw ShapeMismatch("head seed shape mismatch");

  // Head (linear): parameter grads from every order, then pull back.
  g.w[L - 1].noalias() += a0 * ws.h[0][L - 1].transpose();
  if (ws.order >= 1) g.w[L - 1].noalias() += a1 * ws.h[1][L - 1].transpose();
  if (ws.order >= 2) g.w[L - 1].noalias() += a2 * ws.h[2][L - 1].transpose();
  g.b[L - 1] += a0.rowwise().sum();

  Eigen::MatrixXd h0 = m.w[L - 1].transpose() * a0;
  Eigen::MatrixXd h1, h2;
  if (ws.order >= 1) h1 = m.w[L - 1].transpose() * a1;
  if (ws.order >= 2) h2 = m.w[L - 1].transpose() * a2;

  for (int l = hidden - 1; l >= 0; --l) {
    const auto& s = ws.s[l].array();
    Eigen::MatrixXd zb0, zb1, zb2;
    if (m.act == Activation::relu) {
      // phi'' = phi''' = 0 away from kinks: each order passes the mask.
      zb0 = h0.cwiseProduct(ws.s[l]);
      if (ws.order >= 1) zb1 = h1.cwiseProduct(ws.s[l]);
      if (ws.order >= 2) zb2 = h2.cwiseProduct(ws.s[l]);
    } else {
      const auto d1 = s * (1.0 - s);
      zb0 = (h0.array() * d1).matrix();
      if (ws.order >= 1) {
        const auto d2 = d1 * (1.0 - 2.0 * s);
        const auto& z1 = ws.z[1][l].array();
        zb0.array() += h1.array() * d2 * z1;
        zb1 = (h1.array() * d1).matrix();
        if (ws.order >= 2) {
          const auto d3 = d1 * (1.0 - 6.0 * s + 6.0 * s.square());
          const auto& z2 = ws.z[2][l].array();
          zb0.array() += h2.array() * (d3 * z1.square() + d2 * z2);
          zb1.array() += h2.array() * (2.0 * d2 * z1);
          zb2 = (h2.array() * d1).matrix();
        }
      }
    }

    g.w[l].noalias() += zb0 * ws.h[0][l].transpose();
    if (ws.order >= 1) g.w[l].noalias() += zb1 * ws.h[1][l].transpose();
    if (ws.order >= 2) g.w[l].noalias() += zb2 * ws.h[2][l].transpose();
    g.b[l] += zb0.rowwise().sum();

    const bool need_input = l > 0 || Xbar0 || Xbar1 || Xbar2;
    if (!need_input) break;
    h0.noalias() = m.w[l].transpose() * zb0;
    if (ws.order >= 1) h1.noalias() = m.w[l].transpose() * zb1;
    if (ws.order >= 2) h2.noalias() = m.w[l].transpose() * zb2;
  }

  if (Xbar0) *Xbar0 = h0;
  if (Xbar1) *Xbar1 = ws.order >= 1 ? h1 : Eigen::MatrixXd();
  if (Xbar2) *Xbar2 = ws.order >= 2 ? h2 : Eigen::MatrixXd();
}

Eigen::VectorXd forward_time(const Mlp& m, const EncodingConfig& cfg,
                             double t) {
  Eigen::MatrixXd T(1, 1);
  T(0, 0) = t;
  Eigen::MatrixXd E0;
  encode(cfg, T, E0);
  MlpWorkspace ws;
  mlp_forward(m, E0, nullptr, nullptr, ws);
  return ws.y[0].col(0);
}

void time_derivatives(const Mlp& m, const EncodingConfig& cfg, double t,
                      Eigen::VectorXd& y, Eigen::VectorXd& dy,
                      Eigen::VectorXd& d2y) {
  Eigen::MatrixXd T(1, 1);
  T(0, 0) = t;
  Eigen::MatrixXd E0, E1, E2;
  encode(cfg, T, E0, &E1, &E2);
  MlpWorkspace ws;
  mlp_forward(m, E0, &E1, &E2, ws);
  y = ws.y[0].col(0);
  dy = ws.y[1].col(0);
  d2y = ws.y[2].col(0);
}

AdamState AdamState::like(const Mlp& m) {
  AdamState s;
  for (std::size_t l = 0; l < m.w.size(); ++l) {
    s.mw.push_back(Eigen::MatrixXd::Zero(m.w[l].rows(), m.w[l].cols()));
    s.vw.push_back(Eigen::MatrixXd::Zero(m.w[l].rows(), m.w[l].cols()));
    s.mb.push_back(Eigen::VectorXd::Zero(m.b[l].size()));
    s.vb.push_back(Eigen::VectorXd::Zero(m.b[l].size()));
  }
  return s;
}

namespace {

template <typename P, typename G, typename M>
void adam_update(P& p, const G& g, M& m1, M& m2, double lr, double b1,
                 double b2, double eps, double c1, double c2) {
  m1 = b1 * m1 + (1.0 - b1) * g;
  m2.array() = b2 * m2.array() + (1.0 - b2) * g.array().square();
  p.array() -= lr * (m1.array() / c1) / ((m2.array() / c2).sqrt() + eps);
}

}  // namespace

void adam_step(Mlp& m, const MlpGrads& g, AdamState& st, double lr,
               double beta1, double beta2, double eps) {
  if (g.w.size() != m.w.size()) throw ShapeMismatch("grads do not match net");
  st.step += 1;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(st.step));
  for (std::size_t l = 0; l < m.w.size(); ++l) {
    if (g.w[l].rows() != m.w[l].rows() || g.w[l].cols() != m.w[l].cols())
      throw ShapeMismatch("grad shape mismatch");
    adam_update(m.w[l], g.w[l], st.mw[l], st.vw[l], lr, beta1, beta2, eps, c1,
                c2);
    adam_update(m.b[l], g.b[l], st.mb[l], st.vb[l], lr, beta1, beta2, eps, c1,
                c2);
  }
}

double LrSchedule::at(long step) const {
  const double u =
      std::clamp(static_cast<double>(step) / static_cast<double>(total_steps),
                 0.0, 1.0);
  return initial * std::pow(final / initial, u);
}

}  // namespace contpose
