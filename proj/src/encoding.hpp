#pragma once

#include <Eigen/Dense>
#include <optional>

namespace contpose {

// Input feature map for scalar (time) or low-dimensional (pixel) inputs.
// sinusoidal: [t, sin(2^0 pi t), cos(2^0 pi t), ..., sin(2^{F-1} pi t),
// cos(2^{F-1} pi t)], optionally band-weighted for coarse-to-fine schedules.
// linear passes the raw input through; sigmoid_mlp_activation does the same
// but asks the owning network to use sigmoid activations instead of relu.
enum class EncodingKind { sinusoidal, linear, sigmoid_mlp_activation };

struct EncodingConfig {
  EncodingKind kind = EncodingKind::sinusoidal;
  int bands = 5;
  // Anneal progress in [0, bands]; band k has weight 1 once alpha >= k+1.
  std::optional<double> coarse_to_fine;
};

// Output rows per scalar input coordinate.
int encoded_dim(const EncodingConfig& cfg);

// Cosine-eased coarse-to-fine weight of band k at progress alpha.
double band_weight(double alpha, int k);

// Encode one scalar. e0 must have encoded_dim rows; e1/e2 (optional) receive
// exact first/second derivatives with respect to t.
void encode_scalar(const EncodingConfig& cfg, double t, double* e0,
                   double* e1 = nullptr, double* e2 = nullptr);

// Batched: X is in_dim x B, output is (in_dim * encoded_dim) x B with the
// rows of each input coordinate contiguous. E1/E2 get the per-coordinate
// derivative of each output row (each row depends on one coordinate only).
void encode(const EncodingConfig& cfg, const Eigen::MatrixXd& X,
            Eigen::MatrixXd& E0, Eigen::MatrixXd* E1 = nullptr,
            Eigen::MatrixXd* E2 = nullptr);

}  // namespace contpose
