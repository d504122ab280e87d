#include "metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "errors.hpp"

namespace contpose {

AlignmentResult umeyama_align(const std::vector<Eigen::Vector3d>& est,
                              const std::vector<Eigen::Vector3d>& gt,
                              bool with_scale) {
  if (est.size() != gt.size())
    throw LengthMismatch("umeyama_align: point counts differ");
  const int n = static_cast<int>(est.size());
  if (n < 3) throw DegenerateConfiguration("umeyama_align: need 3+ pairs");

  Eigen::Vector3d mu_e = Eigen::Vector3d::Zero();
  Eigen::Vector3d mu_g = Eigen::Vector3d::Zero();
  for (int i = 0; i < n; ++i) {
    mu_e += est[i];
    mu_g += gt[i];
  }
  mu_e /= n;
  mu_g /= n;

  Eigen::Matrix3d cross = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d cov_e = Eigen::Matrix3d::Zero();
  double var_e = 0.0;
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d de = est[i] - mu_e;
    cross += (gt[i] - mu_g) * de.transpose();
    cov_e += de * de.transpose();
    var_e += de.squaredNorm();
  }
  cross /= n;
  var_e /= n;

  // The rotation is only unique when the source spread has rank >= 2;
  // collinear or coincident points leave a free rotation about their axis.
  const Eigen::JacobiSVD<Eigen::Matrix3d> spread(cov_e);
  if (spread.singularValues()(1) <=
      1e-12 * std::max(spread.singularValues()(0), 1e-300))
    throw DegenerateConfiguration(
        "umeyama_align: source points are collinear or coincident");

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Vector3d s = Eigen::Vector3d::Ones();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0)
    s(2) = -1.0;
  const Eigen::Matrix3d R =
      svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();

  AlignmentResult out;
  out.rotation = UnitQuaternion::from_matrix(R);
  out.scale = with_scale ? svd.singularValues().dot(s) / var_e : 1.0;
  out.translation = mu_g - out.scale * (R * mu_e);

  double sq = 0.0;
  for (int i = 0; i < n; ++i) sq += (gt[i] - out.apply(est[i])).squaredNorm();
  out.residual = std::sqrt(sq / n);
  return out;
}

namespace {

std::vector<Eigen::Vector3d> positions(const std::vector<TimedPose3>& poses) {
  std::vector<Eigen::Vector3d> out;
  out.reserve(poses.size());
  for (const auto& tp : poses) out.push_back(tp.pose.translation);
  return out;
}

}  // namespace

double ate_rmse(const std::vector<TimedPose3>& est,
                const std::vector<TimedPose3>& gt, bool align) {
  if (est.size() != gt.size()) throw LengthMismatch("ate_rmse: lengths differ");
  if (est.empty()) throw EmptyInput("ate_rmse: no poses");
  if (align) return umeyama_align(positions(est), positions(gt)).residual;
  double sq = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i)
    sq += (est[i].pose.translation - gt[i].pose.translation).squaredNorm();
  return std::sqrt(sq / static_cast<double>(est.size()));
}

RotTransError rot_trans_error(const std::vector<TimedPose3>& est,
                              const std::vector<TimedPose3>& gt,
                              bool aligned) {
  if (est.size() != gt.size())
    throw LengthMismatch("rot_trans_error: lengths differ");
  if (est.empty()) throw EmptyInput("rot_trans_error: no poses");

  AlignmentResult a;  // identity when not aligning
  if (aligned) a = umeyama_align(positions(est), positions(gt));

  RotTransError out;
  for (std::size_t i = 0; i < est.size(); ++i) {
    out.trans += (gt[i].pose.translation - a.apply(est[i].pose.translation))
                     .norm();
    out.rot_deg += geodesic_angle(a.rotation * est[i].pose.rotation,
                                  gt[i].pose.rotation);
  }
  const double n = static_cast<double>(est.size());
  out.trans /= n;
  out.rot_deg *= 180.0 / 3.14159265358979323846 / n;
  return out;
}

namespace {

void check_same_shape(const Image& a, const Image& b, const char* who) {
  if (a.width != b.width || a.height != b.height || a.channels != b.channels)
    throw ShapeMismatch(std::string(who) + ": image shapes differ");
  if (a.data.empty()) throw EmptyInput(std::string(who) + ": empty image");
}

constexpr int kWin = 11;

const std::array<double, kWin>& gaussian_kernel() {
  static const std::array<double, kWin> kernel = [] {
    std::array<double, kWin> k{};
    const double sigma = 1.5;
    double sum = 0.0;
    for (int i = 0; i < kWin; ++i) {
      const double d = i - (kWin - 1) / 2.0;
      k[i] = std::exp(-d * d / (2.0 * sigma * sigma));
      sum += k[i];
    }
    for (auto& v : k) v /= sum;
    return k;
  }();
  return kernel;
}

Eigen::MatrixXd channel_plane(const Image& img, int c) {
  Eigen::MatrixXd plane(img.height, img.width);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) plane(y, x) = img.at(x, y, c);
  return plane;
}

// Separable valid-mode Gaussian filter: output shrinks by kWin-1 per axis.
Eigen::MatrixXd filter_valid(const Eigen::MatrixXd& plane) {
  const auto& k = gaussian_kernel();
  const int h = static_cast<int>(plane.rows());
  const int w = static_cast<int>(plane.cols());
  Eigen::MatrixXd horiz(h, w - kWin + 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x + kWin <= w; ++x) {
      double acc = 0.0;
      for (int i = 0; i < kWin; ++i) acc += k[i] * plane(y, x + i);
      horiz(y, x) = acc;
    }
  Eigen::MatrixXd out(h - kWin + 1, w - kWin + 1);
  for (int y = 0; y + kWin <= h; ++y)
    for (int x = 0; x < out.cols(); ++x) {
      double acc = 0.0;
      for (int i = 0; i < kWin; ++i) acc += k[i] * horiz(y + i, x);
      out(y, x) = acc;
    }
  return out;
}

}  // namespace

double psnr(const Image& a, const Image& b) {
  check_same_shape(a, b, "psnr");
  double mse = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i)
    mse += (a.data[i] - b.data[i]) * (a.data[i] - b.data[i]);
  mse /= static_cast<double>(a.data.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

double ssim(const Image& a, const Image& b) {
  check_same_shape(a, b, "ssim");
  if (a.width < kWin || a.height < kWin)
    throw DegenerateConfiguration("ssim: image smaller than the 11x11 window");

  const double c1 = 0.01 * 0.01;  // (K1 * L)^2 with L = 1
  const double c2 = 0.03 * 0.03;

  double total = 0.0;
  for (int c = 0; c < a.channels; ++c) {
    const Eigen::MatrixXd pa = channel_plane(a, c);
    const Eigen::MatrixXd pb = channel_plane(b, c);
    const Eigen::MatrixXd mu_a = filter_valid(pa);
    const Eigen::MatrixXd mu_b = filter_valid(pb);
    const Eigen::MatrixXd var_a =
        filter_valid(pa.cwiseProduct(pa)) - mu_a.cwiseProduct(mu_a);
    const Eigen::MatrixXd var_b =
        filter_valid(pb.cwiseProduct(pb)) - mu_b.cwiseProduct(mu_b);
    const Eigen::MatrixXd cov =
        filter_valid(pa.cwiseProduct(pb)) - mu_a.cwiseProduct(mu_b);

    const auto num = (2.0 * mu_a.cwiseProduct(mu_b).array() + c1) *
                     (2.0 * cov.array() + c2);
    const auto den =
        (mu_a.array().square() + mu_b.array().square() + c1) *
        (var_a.array() + var_b.array() + c2);
    total += (num / den).mean();
  }
  return total / a.channels;
}

}  // namespace contpose
