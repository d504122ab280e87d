#include "encoding.hpp"

#include <cmath>

namespace contpose {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

int encoded_dim(const EncodingConfig& cfg) {
  if (cfg.kind == EncodingKind::sinusoidal) return 1 + 2 * cfg.bands;
  return 1;
}

double band_weight(double alpha, int k) {
  const double u = alpha - k;
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  return 0.5 * (1.0 - std::cos(u * kPi));
}

void encode_scalar(const EncodingConfig& cfg, double t, double* e0, double* e1,
                   double* e2) {
  e0[0] = t;
  if (e1) e1[0] = 1.0;
  if (e2) e2[0] = 0.0;
  if (cfg.kind != EncodingKind::sinusoidal) return;
  for (int k = 0; k < cfg.bands; ++k) {
    const double w =
        cfg.coarse_to_fine ? band_weight(*cfg.coarse_to_fine, k) : 1.0;
    const double omega = std::ldexp(kPi, k);  // 2^k * pi
    const double s = std::sin(omega * t), c = std::cos(omega * t);
    e0[1 + 2 * k] = w * s;
    e0[2 + 2 * k] = w * c;
    if (e1) {
      e1[1 + 2 * k] = w * omega * c;
      e1[2 + 2 * k] = -w * omega * s;
    }
    if (e2) {
      e2[1 + 2 * k] = -w * omega * omega * s;
      e2[2 + 2 * k] = -w * omega * omega * c;
    }
  }
}

void encode(const EncodingConfig& cfg, const Eigen::MatrixXd& X,
            Eigen::MatrixXd& E0, Eigen::MatrixXd* E1, Eigen::MatrixXd* E2) {
  const int d = encoded_dim(cfg);
  const auto in_dim = X.rows();
  const auto batch = X.cols();
  E0.resize(in_dim * d, batch);
  if (E1) E1->resize(in_dim * d, batch);
  if (E2) E2->resize(in_dim * d, batch);
  for (Eigen::Index j = 0; j < batch; ++j) {
    for (Eigen::Index i = 0; i < in_dim; ++i) {
      encode_scalar(cfg, X(i, j), E0.col(j).data() + i * d,
                    E1 ? E1->col(j).data() + i * d : nullptr,
                    E2 ? E2->col(j).data() + i * d : nullptr);
    }
  }
}

}  // namespace contpose
