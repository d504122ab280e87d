#include "posenet.hpp"

#include <cmath>

#include "autodiff.hpp"
#include "checkpoint.hpp"
#include "errors.hpp"

namespace contpose {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Pre-tanh bias that makes the squashed scalar part 1 - 1e-6, so the
// normalized head starts at the identity quaternion.
const double kIdentityBias = std::atanh(1.0 - 1e-6);

}  // namespace

PoseNet PoseNet::create(const PoseNetConfig& cfg, Rng& rng) {
  PoseNet net;
  net.cfg_ = cfg;
  const Activation act = cfg.encoding.kind == EncodingKind::sigmoid_mlp_activation
                             ? Activation::sigmoid
                             : Activation::relu;
  const int in = encoded_dim(cfg.encoding);
  const int td = net.trans_dim(), rd = net.rot_dim();
  if (cfg.architecture == Architecture::coupled) {
    net.trans_net = Mlp::create(in, cfg.width, cfg.layers, td + rd, act, rng);
    auto& head_w = net.trans_net.w.back();
    auto& head_b = net.trans_net.b.back();
    head_w.setZero();
    head_b.setZero();
    if (cfg.space == PoseSpace::se3) head_b(td) = kIdentityBias;
  } else {
    net.trans_net = Mlp::create(in, cfg.width, cfg.layers, td, act, rng);
    net.rot_net = Mlp::create(in, cfg.width, cfg.layers, rd, act, rng);
    net.trans_net.w.back().setZero();
    net.trans_net.b.back().setZero();
    net.rot_net.w.back().setZero();
    net.rot_net.b.back().setZero();
    if (cfg.space == PoseSpace::se3) net.rot_net.b.back()(0) = kIdentityBias;
  }
  return net;
}

RigidTransform3 pose_from_heads3(const Eigen::VectorXd& t,
                                 const Eigen::VectorXd& r) {
  const auto q = quat_head(r(0), r(1), r(2), r(3));
  return {UnitQuaternion(q.w, q.x, q.y, q.z), t};
}

RigidTransform2 pose_from_heads2(const Eigen::VectorXd& t, double r) {
  return {kPi * std::tanh(r), t};
}

RigidTransform3 PoseNet::pose3_at(double t) const {
  if (cfg_.space != PoseSpace::se3)
    throw DegenerateConfiguration("pose3_at on an SE2 net");
  if (coupled()) {
    const Eigen::VectorXd y = forward_time(trans_net, cfg_.encoding, t);
    return pose_from_heads3(y.head(3), y.tail(4));
  }
  return pose_from_heads3(forward_time(trans_net, cfg_.encoding, t),
                          forward_time(rot_net, cfg_.encoding, t));
}

RigidTransform2 PoseNet::pose2_at(double t) const {
  if (cfg_.space != PoseSpace::se2)
    throw DegenerateConfiguration("pose2_at on an SE3 net");
  if (coupled()) {
    const Eigen::VectorXd y = forward_time(trans_net, cfg_.encoding, t);
    return pose_from_heads2(y.head(2), y(2));
  }
  return pose_from_heads2(forward_time(trans_net, cfg_.encoding, t),
                          forward_time(rot_net, cfg_.encoding, t)(0));
}

PoseNet::Batch PoseNet::eval(std::span<const double> times, int order,
                             EvalContext& ctx) const {
  Eigen::MatrixXd T(1, static_cast<Eigen::Index>(times.size()));
  for (std::size_t j = 0; j < times.size(); ++j)
    T(0, static_cast<Eigen::Index>(j)) = times[j];
  Eigen::MatrixXd E0, E1, E2;
  encode(cfg_.encoding, T, E0, order >= 1 ? &E1 : nullptr,
         order >= 2 ? &E2 : nullptr);
  ctx.order = order;

  Batch out;
  const int td = trans_dim();
  const int rd = rot_dim();
  mlp_forward(trans_net, E0, order >= 1 ? &E1 : nullptr,
              order >= 2 ? &E2 : nullptr, ctx.trans_ws);
  if (coupled()) {
    const auto& y = ctx.trans_ws.y;
    out.t0 = y[0].topRows(td);
    out.r0 = y[0].bottomRows(rd);
    if (order >= 1) {
      out.t1 = y[1].topRows(td);
      out.r1 = y[1].bottomRows(rd);
    }
    if (order >= 2) {
      out.t2 = y[2].topRows(td);
      out.r2 = y[2].bottomRows(rd);
    }
  } else {
    mlp_forward(rot_net, E0, order >= 1 ? &E1 : nullptr,
                order >= 2 ? &E2 : nullptr, ctx.rot_ws);
    out.t0 = ctx.trans_ws.y[0];
    out.r0 = ctx.rot_ws.y[0];
    if (order >= 1) {
      out.t1 = ctx.trans_ws.y[1];
      out.r1 = ctx.rot_ws.y[1];
    }
    if (order >= 2) {
      out.t2 = ctx.trans_ws.y[2];
      out.r2 = ctx.rot_ws.y[2];
    }
  }
  return out;
}

PoseNet::Grads PoseNet::make_grads() const {
  Grads g;
  g.trans = MlpGrads::like(trans_net);
  if (!coupled()) g.rot = MlpGrads::like(rot_net);
  return g;
}

namespace {

// nullptr when the seed block is empty (treated as zero by mlp_backward).
const Eigen::MatrixXd* maybe(const Eigen::MatrixXd& m) {
  return m.size() > 0 ? &m : nullptr;
}

}  // namespace

void PoseNet::backprop(const EvalContext& ctx, const Batch& seeds,
                       Grads& g) const {
  const auto batch = ctx.trans_ws.h[0][0].cols();
  const int td = trans_dim(), rd = rot_dim();
  auto stack = [&](const Eigen::MatrixXd& t, const Eigen::MatrixXd& r) {
    Eigen::MatrixXd s(td + rd, batch);
    s.topRows(td) = t.size() ? t : Eigen::MatrixXd::Zero(td, batch);
    s.bottomRows(rd) = r.size() ? r : Eigen::MatrixXd::Zero(rd, batch);
    return s;
  };
  if (coupled()) {
    Eigen::MatrixXd s0 = stack(seeds.t0, seeds.r0), s1, s2;
    if (ctx.order >= 1 && (seeds.t1.size() || seeds.r1.size()))
      s1 = stack(seeds.t1, seeds.r1);
    if (ctx.order >= 2 && (seeds.t2.size() || seeds.r2.size()))
      s2 = stack(seeds.t2, seeds.r2);
    mlp_backward(trans_net, ctx.trans_ws, &s0, maybe(s1), maybe(s2), g.trans);
    return;
  }
  if (seeds.t0.size() || seeds.t1.size() || seeds.t2.size())
    mlp_backward(trans_net, ctx.trans_ws, maybe(seeds.t0), maybe(seeds.t1),
                 maybe(seeds.t2), g.trans);
  if (seeds.r0.size() || seeds.r1.size() || seeds.r2.size())
    mlp_backward(rot_net, ctx.rot_ws, maybe(seeds.r0), maybe(seeds.r1),
                 maybe(seeds.r2), g.rot);
}

PoseNet::Trainer PoseNet::make_trainer(long total_steps,
                                       bool anneal_encoding) const {
  Trainer tr;
  tr.trans = AdamState::like(trans_net);
  if (!coupled()) tr.rot = AdamState::like(rot_net);
  tr.sched_trans = {cfg_.lr_trans, cfg_.lr_trans_final, total_steps};
  tr.sched_rot = {cfg_.lr_rot, cfg_.lr_rot_final, total_steps};
  tr.anneal_encoding = anneal_encoding;
  return tr;
}

void PoseNet::apply(Trainer& tr, const Grads& g) {
  // Coupled trunks take the translation schedule (there is only one net).
  adam_step(trans_net, g.trans, tr.trans, tr.sched_trans.at(tr.step));
  if (!coupled()) adam_step(rot_net, g.rot, tr.rot, tr.sched_rot.at(tr.step));
  tr.step += 1;
  if (tr.anneal_encoding && cfg_.encoding.kind == EncodingKind::sinusoidal) {
    const double u = std::min(
        1.0, static_cast<double>(tr.step) /
                 static_cast<double>(tr.sched_trans.total_steps));
    cfg_.encoding.coarse_to_fine = u * cfg_.encoding.bands;
  }
}

RigidTransform3 refined_pose(const PoseNet& net, double t,
                             const RigidTransform3& T_init) {
  return T_init * net.pose3_at(t);
}

RigidTransform3 tracked_pose(const PoseNet& net, double t,
                             const RigidTransform3& T_prev_world,
                             ReferenceFrame frame,
                             const RigidTransform3* random_offset) {
  switch (frame) {
    case ReferenceFrame::default_prev_frame:
      return T_prev_world * net.pose3_at(t);
    case ReferenceFrame::world:
      return net.pose3_at(t);
    case ReferenceFrame::random_perturbed: {
      if (!random_offset)
        throw DegenerateConfiguration("random frame needs an offset");
      return T_prev_world * (*random_offset) * net.pose3_at(t);
    }
  }
  throw DegenerateConfiguration("unknown reference frame");
}

IntrinsicPose intrinsic_pose(const IntrinsicPair& pair, double t) {
  IntrinsicPose out;
  out.T_o = pair.f_o.pose3_at(t);
  out.T_I = pair.f_I.pose3_at(t);
  out.total = out.T_o * out.T_I;
  return out;
}

double pose_loss(const PoseNet& net, std::span<const double> times,
                 std::span<const RigidTransform3> targets,
                 PoseNet::Grads* grads) {
  if (times.size() != targets.size())
    throw LengthMismatch("times and targets differ in length");
  if (times.empty()) throw EmptyInput("no fit targets");
  if (net.config().space != PoseSpace::se3)
    throw DegenerateConfiguration("pose_loss expects an SE3 net");

  const auto k = times.size();
  PoseNet::EvalContext ctx;
  const auto batch = net.eval(times, 0, ctx);

  ad::Tape tape;
  std::vector<ad::Var> tv, rv;
  tv.reserve(3 * k);
  rv.reserve(4 * k);
  for (std::size_t j = 0; j < k; ++j) {
    for (int i = 0; i < 3; ++i)
      tv.push_back(ad::make_leaf(tape, batch.t0(i, j)));
    for (int i = 0; i < 4; ++i)
      rv.push_back(ad::make_leaf(tape, batch.r0(i, j)));
  }
  ad::Var L = ad::make_const(tape, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    const auto& T = targets[j];
    for (int i = 0; i < 3; ++i)
      L = L + ad::sq(tv[3 * j + i] - T.translation(i));
    const auto q = quat_head(rv[4 * j], rv[4 * j + 1], rv[4 * j + 2],
                             rv[4 * j + 3]);
    const auto tgt = T.rotation.coeffs_wxyz();
    // Respect the double cover: match whichever sign is closer.
    ad::Var plus = ad::sq(q.w - tgt(0)) + ad::sq(q.x - tgt(1)) +
                   ad::sq(q.y - tgt(2)) + ad::sq(q.z - tgt(3));
    ad::Var minus = ad::sq(q.w + tgt(0)) + ad::sq(q.x + tgt(1)) +
                    ad::sq(q.y + tgt(2)) + ad::sq(q.z + tgt(3));
    L = L + ad::min(plus, minus);
  }
  L = L / static_cast<double>(k);
  if (!std::isfinite(L.v)) throw NonFiniteLoss("pose loss is not finite");

  if (grads) {
    const auto adj = tape.gradient(L.idx);
    PoseNet::Batch seeds;
    seeds.t0.resize(3, static_cast<Eigen::Index>(k));
    seeds.r0.resize(4, static_cast<Eigen::Index>(k));
    for (std::size_t j = 0; j < k; ++j) {
      for (int i = 0; i < 3; ++i) seeds.t0(i, j) = adj[tv[3 * j + i].idx];
      for (int i = 0; i < 4; ++i) seeds.r0(i, j) = adj[rv[4 * j + i].idx];
    }
    net.backprop(ctx, seeds, *grads);
  }
  return L.v;
}

double fit_pose_targets(PoseNet& net, std::span<const double> times,
                        std::span<const RigidTransform3> targets,
                        const PoseFitOptions& opt) {
  AdamState st_t = AdamState::like(net.trans_net);
  AdamState st_r = AdamState::like(net.rot_net);
  const bool coupled = net.config().architecture == Architecture::coupled;
  LrSchedule lt{opt.lr_trans, opt.lr_trans * opt.lr_decay, opt.iterations};
  LrSchedule lr{opt.lr_rot, opt.lr_rot * opt.lr_decay, opt.iterations};

  double last = 0.0;
  for (int it = 0; it < opt.iterations; ++it) {
    auto g = net.make_grads();
    last = pose_loss(net, times, targets, &g);
    adam_step(net.trans_net, g.trans, st_t, lt.at(it));
    if (!coupled) adam_step(net.rot_net, g.rot, st_r, lr.at(it));
  }
  return last;
}

void PoseNet::save(const std::string& path, std::uint64_t seed) const {
  nlohmann::json extra;
  extra["encoding"] = encoding_to_json(cfg_.encoding);
  extra["seed"] = seed;
  extra["architecture"] =
      cfg_.architecture == Architecture::coupled ? "coupled" : "decoupled";
  extra["layers"] = cfg_.layers;
  extra["width"] = cfg_.width;
  extra["space"] = cfg_.space == PoseSpace::se3 ? "se3" : "se2";
  extra["lr_trans"] = cfg_.lr_trans;
  extra["lr_rot"] = cfg_.lr_rot;
  extra["lr_trans_final"] = cfg_.lr_trans_final;
  extra["lr_rot_final"] = cfg_.lr_rot_final;
  if (coupled())
    save_checkpoint(path, {{"trans", &trans_net}}, extra);
  else
    save_checkpoint(path, {{"trans", &trans_net}, {"rot", &rot_net}}, extra);
}

PoseNet PoseNet::load(const std::string& path) {
  PoseNet net;
  // Peek the header to learn the architecture, then load the right nets.
  nlohmann::json header = load_checkpoint(path, {});
  PoseNetConfig cfg;
  cfg.encoding = encoding_from_json(header.at("encoding"));
  cfg.architecture = header.at("architecture").get<std::string>() == "coupled"
                         ? Architecture::coupled
                         : Architecture::decoupled;
  cfg.layers = header.at("layers").get<int>();
  cfg.width = header.at("width").get<int>();
  cfg.space = header.at("space").get<std::string>() == "se3" ? PoseSpace::se3
                                                             : PoseSpace::se2;
  cfg.lr_trans = header.at("lr_trans").get<double>();
  cfg.lr_rot = header.at("lr_rot").get<double>();
  cfg.lr_trans_final = header.at("lr_trans_final").get<double>();
  cfg.lr_rot_final = header.at("lr_rot_final").get<double>();
  net.cfg_ = cfg;
  if (cfg.architecture == Architecture::coupled)
    load_checkpoint(path, {{"trans", &net.trans_net}});
  else
    load_checkpoint(path, {{"trans", &net.trans_net}, {"rot", &net.rot_net}});
  return net;
}

}  // namespace contpose
