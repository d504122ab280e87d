#include "imu.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "autodiff.hpp"
#include "errors.hpp"
#include "rng.hpp"

namespace contpose {

std::vector<ImuSample> simulate_imu(const ContinuousTrajectory3& traj,
                                    double hz, double noise_std,
                                    std::uint64_t seed) {
  if (hz <= 0) throw DegenerateConfiguration("imu rate must be > 0");
  const double t0 = traj.t_min(), t1 = traj.t_max();
  const double dt = 1.0 / hz;
  if (t1 - t0 < 2.0 * dt)
    throw DegenerateConfiguration(
        "trajectory shorter than two imu sample intervals");

  Rng rng(seed);
  const long n = static_cast<long>(std::floor((t1 - t0) * hz + 1e-9));
  std::vector<ImuSample> out;
  out.reserve(n + 1);
  for (long k = 0; k <= n; ++k) {
    const double t = t0 + static_cast<double>(k) / hz;
    // Derivative stencil center; boundary samples borrow the nearest one.
    const double tc = std::clamp(t, t0 + dt, t1 - dt);
    const auto prev = traj.pose(tc - dt);
    const auto mid = traj.pose(tc);
    const auto next = traj.pose(tc + dt);

    ImuSample s;
    s.t = t;
    s.omega = (prev.rotation.inverse() * next.rotation).to_rotation_vector() /
              (2.0 * dt);
    const Eigen::Vector3d a_world =
        (next.translation - 2.0 * mid.translation + prev.translation) /
        (dt * dt);
    s.accel = mid.rotation.inverse().rotate(a_world);
    if (noise_std > 0.0) {
      s.omega += noise_std * Eigen::Vector3d(rng.normal(), rng.normal(),
                                             rng.normal());
      s.accel += noise_std * Eigen::Vector3d(rng.normal(), rng.normal(),
                                             rng.normal());
    }
    out.push_back(s);
  }
  return out;
}

UnitQuaternion delta_quat(const Eigen::Vector3d& omega, double dt) {
  const double rate = omega.norm();
  if (rate < 1e-12) return UnitQuaternion::identity();
  return UnitQuaternion::from_axis_angle(omega, dt * rate);
}

namespace {

void check_coverage(const std::vector<ImuSample>& stream, double t_from,
                    double t_to, const char* who) {
  if (t_to < t_from)
    throw DegenerateConfiguration(std::string(who) + ": reversed interval");
  if (stream.empty())
    throw InsufficientCoverage(std::string(who) + ": empty stream");
  double gap = 0.0;
  for (std::size_t i = 0; i + 1 < stream.size(); ++i) {
    const double d = stream[i + 1].t - stream[i].t;
    if (d <= 0.0)
      throw DegenerateConfiguration(std::string(who) + ": unsorted stream");
    gap = std::max(gap, d);
  }
  if (stream.front().t > t_from + gap + 1e-9 ||
      stream.back().t < t_to - gap - 1e-9)
    throw InsufficientCoverage(std::string(who) + ": stream does not span [" +
                               std::to_string(t_from) + ", " +
                               std::to_string(t_to) + "]");
}

// Walks [t_from, t_to] in zero-order-hold intervals, calling
// step(sample, dt) once per piece with the reading held at its left end.
template <typename F>
void fold_stream(const std::vector<ImuSample>& stream, double t_from,
                 double t_to, F&& step) {
  double cursor = t_from;
  if (cursor < stream.front().t) {
    const double hi = std::min(stream.front().t, t_to);
    step(stream.front(), hi - cursor);
    cursor = hi;
  }
  for (std::size_t i = 0; i < stream.size() && cursor < t_to; ++i) {
    const double seg_hi =
        i + 1 < stream.size() ? std::min(stream[i + 1].t, t_to) : t_to;
    const double lo = std::max(stream[i].t, cursor);
    if (seg_hi > lo) {
      step(stream[i], seg_hi - lo);
      cursor = seg_hi;
    }
  }
}

}  // namespace

UnitQuaternion integrate_gyro(const std::vector<ImuSample>& stream,
                              const UnitQuaternion& q0, double t_from,
                              double t_to) {
  if (t_to == t_from) return q0;
  check_coverage(stream, t_from, t_to, "integrate_gyro");
  UnitQuaternion q = q0;
  fold_stream(stream, t_from, t_to, [&](const ImuSample& s, double dt) {
    q = q * delta_quat(s.omega, dt);
  });
  return q;
}

PreintegratedSegment preintegrate_segment(const std::vector<ImuSample>& stream,
                                          double t_from, double t_to) {
  PreintegratedSegment seg;
  if (t_to == t_from) return seg;
  check_coverage(stream, t_from, t_to, "preintegrate_segment");
  fold_stream(stream, t_from, t_to, [&](const ImuSample& s, double dt) {
    const Eigen::Vector3d a = seg.dq.rotate(s.accel);
    seg.dp += seg.dv * dt + 0.5 * dt * dt * a;
    seg.dv += dt * a;
    seg.dq = seg.dq * delta_quat(s.omega, dt);
  });
  return seg;
}

namespace {

Eigen::Vector3d interp_stream(const std::vector<ImuSample>& stream, double t,
                              Eigen::Vector3d ImuSample::*member) {
  if (stream.empty()) throw EmptyInput("imu stream is empty");
  if (t <= stream.front().t) return stream.front().*member;
  if (t >= stream.back().t) return stream.back().*member;
  const auto it = std::upper_bound(
      stream.begin(), stream.end(), t,
      [](double v, const ImuSample& s) { return v < s.t; });
  const auto& hi = *it;
  const auto& lo = *(it - 1);
  const double u = (t - lo.t) / (hi.t - lo.t);
  return (1.0 - u) * (lo.*member) + u * (hi.*member);
}

void require_se3(const PoseNet& net, const char* who) {
  if (net.config().space != PoseSpace::se3)
    throw DegenerateConfiguration(std::string(who) + " expects an SE3 net");
}

qops::QuatT<ad::Var> lift(ad::Tape& tape, const UnitQuaternion& q) {
  return {ad::make_const(tape, q.w()), ad::make_const(tape, q.x()),
          ad::make_const(tape, q.y()), ad::make_const(tape, q.z())};
}

}  // namespace

Eigen::Vector3d sample_omega(const std::vector<ImuSample>& stream, double t) {
  return interp_stream(stream, t, &ImuSample::omega);
}

Eigen::Vector3d sample_accel(const std::vector<ImuSample>& stream, double t) {
  return interp_stream(stream, t, &ImuSample::accel);
}

void save_imu_csv(const std::string& path,
                  const std::vector<ImuSample>& stream) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "t,wx,wy,wz,ax,ay,az\n";
  char line[256];
  for (const auto& s : stream) {
    std::snprintf(line, sizeof(line),
                  "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", s.t,
                  s.omega.x(), s.omega.y(), s.omega.z(), s.accel.x(),
                  s.accel.y(), s.accel.z());
    out << line;
  }
  if (!out) throw IoError("write failed: " + path);
}

std::vector<ImuSample> load_imu_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("t,wx,wy,wz,ax,ay,az", 0) != 0)
    throw IoError("missing imu csv header in " + path);
  std::vector<ImuSample> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ImuSample s;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    if (!(ss >> s.t >> s.omega.x() >> s.omega.y() >> s.omega.z() >>
          s.accel.x() >> s.accel.y() >> s.accel.z()))
      throw IoError("malformed imu csv line: " + line);
    out.push_back(s);
  }
  return out;
}

double loss_loose(const PoseNet& net, const std::vector<ImuSample>& stream,
                  std::span<const double> frame_times,
                  PoseNet::Grads* grads) {
  require_se3(net, "loss_loose");
  if (frame_times.size() < 2)
    throw DegenerateConfiguration("loss_loose needs at least two frames");
  const auto k = frame_times.size();

  PoseNet::EvalContext ctx;
  const auto batch = net.eval(frame_times, 0, ctx);

  ad::Tape tape;
  std::vector<ad::Var> rv;
  rv.reserve(4 * k);
  for (std::size_t j = 0; j < k; ++j)
    for (int i = 0; i < 4; ++i)
      rv.push_back(ad::make_leaf(tape, batch.r0(i, j)));

  std::vector<qops::QuatT<ad::Var>> q(k);
  for (std::size_t j = 0; j < k; ++j)
    q[j] = quat_head(rv[4 * j], rv[4 * j + 1], rv[4 * j + 2], rv[4 * j + 3]);

  ad::Var L = ad::make_const(tape, 0.0);
  for (std::size_t j = 1; j < k; ++j) {
    const UnitQuaternion dq = integrate_gyro(
        stream, UnitQuaternion::identity(), frame_times[j - 1], frame_times[j]);
    const auto pred = qops::mul(q[j - 1], lift(tape, dq));
    const auto& cur = q[j];
    ad::Var plus = ad::abs(cur.w - pred.w) + ad::abs(cur.x - pred.x) +
                   ad::abs(cur.y - pred.y) + ad::abs(cur.z - pred.z);
    ad::Var minus = ad::abs(cur.w + pred.w) + ad::abs(cur.x + pred.x) +
                    ad::abs(cur.y + pred.y) + ad::abs(cur.z + pred.z);
    L = L + ad::min(plus, minus);
  }
  if (!std::isfinite(L.v)) throw NonFiniteLoss("loss_loose is not finite");

  if (grads) {
    const auto adj = tape.gradient(L.idx);
    PoseNet::Batch seeds;
    seeds.r0.resize(4, static_cast<Eigen::Index>(k));
    for (std::size_t j = 0; j < k; ++j)
      for (int i = 0; i < 4; ++i) seeds.r0(i, j) = adj[rv[4 * j + i].idx];
    net.backprop(ctx, seeds, *grads);
  }
  return L.v;
}

double loss_loose_segment(const PoseNet& net,
                          const std::vector<ImuSample>& stream,
                          const UnitQuaternion& q_base, double t_from,
                          double t_to, PoseNet::Grads* grads) {
  require_se3(net, "loss_loose_segment");
  const std::array<double, 1> times{t_to};

  PoseNet::EvalContext ctx;
  const auto batch = net.eval(times, 0, ctx);

  ad::Tape tape;
  ad::Var rv[4];
  for (int i = 0; i < 4; ++i) rv[i] = ad::make_leaf(tape, batch.r0(i, 0));
  const auto cur = quat_head(rv[0], rv[1], rv[2], rv[3]);

  const auto pred = lift(tape, integrate_gyro(stream, q_base, t_from, t_to));
  ad::Var plus = ad::abs(cur.w - pred.w) + ad::abs(cur.x - pred.x) +
                 ad::abs(cur.y - pred.y) + ad::abs(cur.z - pred.z);
  ad::Var minus = ad::abs(cur.w + pred.w) + ad::abs(cur.x + pred.x) +
                  ad::abs(cur.y + pred.y) + ad::abs(cur.z + pred.z);
  ad::Var L = ad::min(plus, minus);
  if (!std::isfinite(L.v))
    throw NonFiniteLoss("loss_loose_segment is not finite");

  if (grads) {
    const auto adj = tape.gradient(L.idx);
    PoseNet::Batch seeds;
    seeds.r0.resize(4, 1);
    for (int i = 0; i < 4; ++i) seeds.r0(i, 0) = adj[rv[i].idx];
    net.backprop(ctx, seeds, *grads);
  }
  return L.v;
}

double loss_tight(const PoseNet& net, const std::vector<ImuSample>& stream,
                  std::span<const double> sample_times,
                  PoseNet::Grads* grads) {
  require_se3(net, "loss_tight");
  if (sample_times.empty()) throw EmptyInput("loss_tight: no sample times");
  const auto k = sample_times.size();

  PoseNet::EvalContext ctx;
  const auto batch = net.eval(sample_times, 1, ctx);

  ad::Tape tape;
  std::vector<ad::Var> r0v, r1v;
  r0v.reserve(4 * k);
  r1v.reserve(4 * k);
  for (std::size_t j = 0; j < k; ++j)
    for (int i = 0; i < 4; ++i) {
      r0v.push_back(ad::make_leaf(tape, batch.r0(i, j)));
      r1v.push_back(ad::make_leaf(tape, batch.r1(i, j)));
    }

  ad::Var L = ad::make_const(tape, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    // Head and its time derivative through tanh + normalization, with the
    // raw derivative entering as a leaf: d(u/n) = du/n - u (u . du)/n^3.
    ad::Var u[4], du[4];
    for (int i = 0; i < 4; ++i) {
      u[i] = ad::tanh(r0v[4 * j + i]);
      du[i] = (1.0 - ad::sq(u[i])) * r1v[4 * j + i];
    }
    ad::Var n2 = ad::sq(u[0]) + ad::sq(u[1]) + ad::sq(u[2]) + ad::sq(u[3]);
    ad::Var n = ad::sqrt(n2);
    ad::Var udot = u[0] * du[0] + u[1] * du[1] + u[2] * du[2] + u[3] * du[3];
    ad::Var qv[4], qd[4];
    for (int i = 0; i < 4; ++i) {
      qv[i] = u[i] / n;
      qd[i] = du[i] / n - u[i] * udot / (n2 * n);
    }

    const Eigen::Vector3d w = sample_omega(stream, sample_times[j]);
    // 0.5 * q (x) [0, w] componentwise.
    ad::Var pw = -0.5 * (qv[1] * w.x() + qv[2] * w.y() + qv[3] * w.z());
    ad::Var px = 0.5 * (qv[0] * w.x() + qv[2] * w.z() - qv[3] * w.y());
    ad::Var py = 0.5 * (qv[0] * w.y() + qv[3] * w.x() - qv[1] * w.z());
    ad::Var pz = 0.5 * (qv[0] * w.z() + qv[1] * w.y() - qv[2] * w.x());

    L = L + ad::abs(qd[0] - pw) + ad::abs(qd[1] - px) + ad::abs(qd[2] - py) +
        ad::abs(qd[3] - pz);
  }
  if (!std::isfinite(L.v)) throw NonFiniteLoss("loss_tight is not finite");

  if (grads) {
    const auto adj = tape.gradient(L.idx);
    PoseNet::Batch seeds;
    seeds.r0.resize(4, static_cast<Eigen::Index>(k));
    seeds.r1.resize(4, static_cast<Eigen::Index>(k));
    for (std::size_t j = 0; j < k; ++j)
      for (int i = 0; i < 4; ++i) {
        seeds.r0(i, j) = adj[r0v[4 * j + i].idx];
        seeds.r1(i, j) = adj[r1v[4 * j + i].idx];
      }
    net.backprop(ctx, seeds, *grads);
  }
  return L.v;
}

double loss_acc(const PoseNet& net, const std::vector<ImuSample>& stream,
                std::span<const double> sample_times,
                PoseNet::Grads* grads) {
  require_se3(net, "loss_acc");
  if (sample_times.empty()) throw EmptyInput("loss_acc: no sample times");
  const auto k = sample_times.size();

  PoseNet::EvalContext ctx;
  const auto batch = net.eval(sample_times, 2, ctx);

  ad::Tape tape;
  std::vector<ad::Var> t2v;
  t2v.reserve(3 * k);
  for (std::size_t j = 0; j < k; ++j)
    for (int i = 0; i < 3; ++i)
      t2v.push_back(ad::make_leaf(tape, batch.t2(i, j)));

  ad::Var L = ad::make_const(tape, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    // Reading rotated into the net's output frame by the detached rotation
    // estimate, so only the translation head receives gradient.
    const auto qh = quat_head(batch.r0(0, j), batch.r0(1, j), batch.r0(2, j),
                              batch.r0(3, j));
    const UnitQuaternion q(qh.w, qh.x, qh.y, qh.z);
    const Eigen::Vector3d target =
        q.rotate(sample_accel(stream, sample_times[j]));
    for (int i = 0; i < 3; ++i)
      L = L + ad::abs(t2v[3 * j + i] - target(i));
  }
  if (!std::isfinite(L.v)) throw NonFiniteLoss("loss_acc is not finite");

  if (grads) {
    const auto adj = tape.gradient(L.idx);
    PoseNet::Batch seeds;
    seeds.t2.resize(3, static_cast<Eigen::Index>(k));
    for (std::size_t j = 0; j < k; ++j)
      for (int i = 0; i < 3; ++i) seeds.t2(i, j) = adj[t2v[3 * j + i].idx];
    net.backprop(ctx, seeds, *grads);
  }
  return L.v;
}

}  // namespace contpose
