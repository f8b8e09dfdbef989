#include "mrta/policy_net.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace mrta {

const char* to_string(Role r) { return r == Role::kPlanner ? "planner" : "executor"; }

FeatureScales FeatureScales::from_config(const WorldConfig& cfg) {
  FeatureScales s;
  s.width = cfg.width;
  s.height = cfg.height;
  s.diagonal = cfg.diagonal();
  s.time_scale = cfg.diagonal() / cfg.v_max;
  return s;
}

namespace {

Eigen::MatrixXd task_rows(const Observation& obs, const FeatureScales& s) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(obs.tasks.size()), kTaskFeatureDim);
  for (std::size_t i = 0; i < obs.tasks.size(); ++i) {
    const auto& f = obs.tasks[i];
    const auto r = static_cast<Eigen::Index>(i);
    m(r, 0) = f[0] / s.width;
    m(r, 1) = f[1] / s.height;
    m(r, 2) = f[2] / s.width;
    m(r, 3) = f[3] / s.height;
    m(r, 4) = f[4] / s.diagonal;
    m(r, 5) = (obs.clock - f[5]) / s.time_scale;
  }
  return m;
}

Eigen::MatrixXd robot_rows(const Observation& obs, const FeatureScales& s, const Vec2& origin) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(obs.robots.size()), kRobotFeatureDim);
  for (std::size_t j = 0; j < obs.robots.size(); ++j) {
    const auto& f = obs.robots[j];
    const auto r = static_cast<Eigen::Index>(j);
    m(r, 0) = (f[0] - origin.x()) / s.width;
    m(r, 1) = (f[1] - origin.y()) / s.height;
    m(r, 2) = std::min(f[2] / s.time_scale, s.r_clip);
    m(r, 3) = f[3];
  }
  return m;
}

}  // namespace

NetInput planner_input(const Observation& obs, const FeatureScales& s) {
  NetInput in;
  in.tasks = task_rows(obs, s);
  in.robots = robot_rows(obs, s, Vec2::Zero());
  in.masked = obs.masked;
  return in;
}

NetInput executor_input(const Observation& obs, int selected_task, const FeatureScales& s) {
  if (selected_task < 0 || selected_task >= static_cast<int>(obs.tasks.size())) {
    throw ValidationError("executor_input: selected task outside the look-ahead queue");
  }
  const auto& t = obs.tasks[static_cast<std::size_t>(selected_task)];
  NetInput in;
  in.tasks = task_rows(obs, s);
  in.robots = robot_rows(obs, s, Vec2(t[0], t[1]));
  in.masked = obs.masked;
  in.selected_task = selected_task;
  return in;
}

const std::array<LayerShape, PolicyNet::kLayerCount>& PolicyNet::shapes() {
  static const std::array<LayerShape, kLayerCount> kShapes{{
      {kTaskFeatureDim, kEmbed},
      {kEmbed, kEmbed},
      {kRobotFeatureDim, kEmbed},
      {kEmbed, kEmbed},
      {kEmbed, kEmbed},
      {kEmbed, 1},
      {kEmbed, kEmbed},
      {kEmbed, 1},
      {3 * kEmbed, kScoreHidden},
      {kScoreHidden, 1},
      {2 * kEmbed, kValueHidden},
      {kValueHidden, 1},
  }};
  return kShapes;
}

std::size_t PolicyNet::offset(Layer l) {
  std::size_t off = 0;
  for (int k = 0; k < l; ++k) {
    const auto& s = shapes()[k];
    off += static_cast<std::size_t>(s.in * s.out + s.out);
  }
  return off;
}

std::size_t PolicyNet::parameter_count() { return offset(kLayerCount); }
std::size_t PolicyNet::policy_parameter_count() { return offset(kValueFc1); }

PolicyNet::PolicyNet(Role role) : role_(role), params_(parameter_count(), 0.0) {}

void PolicyNet::init(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (int l = 0; l < kLayerCount; ++l) {
    const auto& s = shapes()[l];
    const double bound = 1.0 / std::sqrt(static_cast<double>(s.in));
    std::uniform_real_distribution<double> u(-bound, bound);
    const std::size_t off = offset(static_cast<Layer>(l));
    for (int k = 0; k < s.in * s.out + s.out; ++k) params_[off + k] = u(rng);
  }
}

Eigen::Map<const Eigen::MatrixXd> PolicyNet::weight(Layer l) const {
  const auto& s = shapes()[l];
  return {params_.data() + offset(l), s.out, s.in};
}

Eigen::Map<const Eigen::VectorXd> PolicyNet::bias(Layer l) const {
  const auto& s = shapes()[l];
  return {params_.data() + offset(l) + static_cast<std::size_t>(s.in * s.out), s.out};
}

struct PolicyNet::Cache {
  Eigen::MatrixXd task_h, task_e;    // 16 x m
  Eigen::MatrixXd robot_h, robot_e;  // 16 x n
  Eigen::MatrixXd task_s, robot_s;   // tanh activations
  Eigen::RowVectorXd task_a, robot_a;
  Eigen::VectorXd pool_task, pool_robot;
  Eigen::MatrixXd cand;     // 48 x K
  Eigen::MatrixXd score_h;  // 8 x K
  Eigen::VectorXd value_in, value_h;
  Output out;
};

void PolicyNet::check_input(const NetInput& in) const {
  if (in.tasks.cols() != kTaskFeatureDim || in.robots.cols() != kRobotFeatureDim) {
    throw ValidationError("PolicyNet: feature width mismatch");
  }
  if (in.tasks.rows() < 1 || in.robots.rows() < 1) {
    throw ValidationError("PolicyNet: empty task or robot block");
  }
  if (!in.masked.empty() && in.masked.size() != static_cast<std::size_t>(in.robots.rows())) {
    throw ValidationError("PolicyNet: mask size mismatch");
  }
  if (role_ == Role::kExecutor) {
    if (in.selected_task < 0 || in.selected_task >= in.tasks.rows()) {
      throw ValidationError("PolicyNet: executor needs a selected task");
    }
    const bool all_masked = !in.masked.empty() &&
                            std::all_of(in.masked.begin(), in.masked.end(), [](bool b) { return b; });
    if (all_masked) throw ValidationError("PolicyNet: every robot is masked");
  }
}

namespace {

Eigen::MatrixXd relu(const Eigen::MatrixXd& x) { return x.cwiseMax(0.0); }

Eigen::MatrixXd affine(const Eigen::Map<const Eigen::MatrixXd>& w,
                       const Eigen::Map<const Eigen::VectorXd>& b, const Eigen::MatrixXd& x) {
  return (w * x).colwise() + b;
}

}  // namespace

PolicyNet::Cache PolicyNet::run(const NetInput& in) const {
  check_input(in);
  Cache c;
  c.task_h = relu(affine(weight(kTaskFc1), bias(kTaskFc1), in.tasks.transpose()));
  c.task_e = affine(weight(kTaskFc2), bias(kTaskFc2), c.task_h);
  c.robot_h = relu(affine(weight(kRobotFc1), bias(kRobotFc1), in.robots.transpose()));
  c.robot_e = affine(weight(kRobotFc2), bias(kRobotFc2), c.robot_h);

  c.task_s = affine(weight(kTaskAtt1), bias(kTaskAtt1), c.task_e).array().tanh();
  c.task_a = affine(weight(kTaskAtt2), bias(kTaskAtt2), c.task_s)
                 .array()
                 .unaryExpr([](double z) { return 1.0 / (1.0 + std::exp(-z)); });
  c.robot_s = affine(weight(kRobotAtt1), bias(kRobotAtt1), c.robot_e).array().tanh();
  c.robot_a = affine(weight(kRobotAtt2), bias(kRobotAtt2), c.robot_s)
                  .array()
                  .unaryExpr([](double z) { return 1.0 / (1.0 + std::exp(-z)); });

  c.pool_task = c.task_e * c.task_a.transpose();
  c.pool_robot = c.robot_e * c.robot_a.transpose();

  const bool planner = role_ == Role::kPlanner;
  const Eigen::Index k = planner ? in.tasks.rows() : in.robots.rows();
  c.cand.resize(3 * kEmbed, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    c.cand.block(0, i, kEmbed, 1) = c.pool_robot;
    if (planner) {
      c.cand.block(kEmbed, i, kEmbed, 1) = c.pool_task;
      c.cand.block(2 * kEmbed, i, kEmbed, 1) = c.task_e.col(i);
    } else {
      c.cand.block(kEmbed, i, kEmbed, 1) = c.task_e.col(in.selected_task);
      c.cand.block(2 * kEmbed, i, kEmbed, 1) = c.robot_e.col(i);
    }
  }
  c.score_h = relu(affine(weight(kScoreFc1), bias(kScoreFc1), c.cand));
  c.out.logits = affine(weight(kScoreFc2), bias(kScoreFc2), c.score_h).row(0).transpose();

  const double neg_inf = -std::numeric_limits<double>::infinity();
  if (!planner && !in.masked.empty()) {
    for (Eigen::Index j = 0; j < k; ++j) {
      if (in.masked[static_cast<std::size_t>(j)]) c.out.logits(j) = neg_inf;
    }
  }
  const double mx = c.out.logits.maxCoeff();
  double z = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    if (c.out.logits(i) != neg_inf) z += std::exp(c.out.logits(i) - mx);
  }
  const double log_z = mx + std::log(z);
  c.out.log_probs.resize(k);
  c.out.probs.resize(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    if (c.out.logits(i) == neg_inf) {
      c.out.log_probs(i) = neg_inf;
      c.out.probs(i) = 0.0;
    } else {
      c.out.log_probs(i) = c.out.logits(i) - log_z;
      c.out.probs(i) = std::exp(c.out.log_probs(i));
    }
  }

  c.value_in.resize(2 * kEmbed);
  c.value_in << c.pool_robot, c.pool_task;
  c.value_h = relu(affine(weight(kValueFc1), bias(kValueFc1), c.value_in));
  c.out.value = (weight(kValueFc2) * c.value_h)(0) + bias(kValueFc2)(0);
  return c;
}

PolicyNet::Output PolicyNet::forward(const NetInput& in) const { return run(in).out; }

void PolicyNet::backward(const NetInput& in, const Eigen::VectorXd& dlogits, double dvalue,
                         std::span<double> grad) const {
  if (grad.size() != params_.size()) throw ValidationError("PolicyNet::backward: gradient size");
  const Cache c = run(in);
  const bool planner = role_ == Role::kPlanner;
  const Eigen::Index k = c.cand.cols();
  if (dlogits.size() != k) throw ValidationError("PolicyNet::backward: dlogits size");

  auto gw = [&](Layer l) {
    const auto& s = shapes()[l];
    return Eigen::Map<Eigen::MatrixXd>(grad.data() + offset(l), s.out, s.in);
  };
  auto gb = [&](Layer l) {
    const auto& s = shapes()[l];
    return Eigen::Map<Eigen::VectorXd>(grad.data() + offset(l) + static_cast<std::size_t>(s.in * s.out),
                                       s.out);
  };

  // Masked candidates carry no gradient.
  Eigen::RowVectorXd dl = dlogits.transpose();
  for (Eigen::Index i = 0; i < k; ++i) {
    if (!std::isfinite(c.out.logits(i))) dl(i) = 0.0;
  }

  // Scorer.
  gw(kScoreFc2) += dl * c.score_h.transpose();
  gb(kScoreFc2)(0) += dl.sum();
  Eigen::MatrixXd dh = weight(kScoreFc2).transpose() * dl;
  dh = dh.cwiseProduct((c.score_h.array() > 0.0).cast<double>().matrix());
  gw(kScoreFc1) += dh * c.cand.transpose();
  gb(kScoreFc1) += dh.rowwise().sum();
  const Eigen::MatrixXd dcand = weight(kScoreFc1).transpose() * dh;

  Eigen::VectorXd dpool_robot = dcand.topRows(kEmbed).rowwise().sum();
  Eigen::VectorXd dpool_task = Eigen::VectorXd::Zero(kEmbed);
  Eigen::MatrixXd dtask_e = Eigen::MatrixXd::Zero(kEmbed, c.task_e.cols());
  Eigen::MatrixXd drobot_e = Eigen::MatrixXd::Zero(kEmbed, c.robot_e.cols());
  if (planner) {
    dpool_task += dcand.middleRows(kEmbed, kEmbed).rowwise().sum();
    dtask_e += dcand.bottomRows(kEmbed);
  } else {
    dtask_e.col(in.selected_task) += dcand.middleRows(kEmbed, kEmbed).rowwise().sum();
    drobot_e += dcand.bottomRows(kEmbed);
  }

  // Value head.
  gw(kValueFc2) += dvalue * c.value_h.transpose();
  gb(kValueFc2)(0) += dvalue;
  Eigen::VectorXd dvh = weight(kValueFc2).transpose() * dvalue;
  dvh = dvh.cwiseProduct((c.value_h.array() > 0.0).cast<double>().matrix());
  gw(kValueFc1) += dvh * c.value_in.transpose();
  gb(kValueFc1) += dvh;
  const Eigen::VectorXd dvin = weight(kValueFc1).transpose() * dvh;
  dpool_robot += dvin.head(kEmbed);
  dpool_task += dvin.tail(kEmbed);

  // Attention pooling and extractors, shared by both entity types.
  auto pool_back = [&](const Eigen::MatrixXd& e, const Eigen::MatrixXd& s, const Eigen::RowVectorXd& a,
                       const Eigen::VectorXd& dpool, Eigen::MatrixXd& de, Layer att1, Layer att2) {
    de += dpool * a;
    const Eigen::RowVectorXd da = dpool.transpose() * e;
    const Eigen::RowVectorXd dz = da.array() * a.array() * (1.0 - a.array());
    gw(att2) += dz * s.transpose();
    gb(att2)(0) += dz.sum();
    Eigen::MatrixXd ds = weight(att2).transpose() * dz;
    ds = ds.cwiseProduct((1.0 - s.array().square()).matrix());
    gw(att1) += ds * e.transpose();
    gb(att1) += ds.rowwise().sum();
    de += weight(att1).transpose() * ds;
  };
  auto extractor_back = [&](const Eigen::MatrixXd& x, const Eigen::MatrixXd& h, const Eigen::MatrixXd& de,
                            Layer fc1, Layer fc2) {
    gw(fc2) += de * h.transpose();
    gb(fc2) += de.rowwise().sum();
    Eigen::MatrixXd dh1 = weight(fc2).transpose() * de;
    dh1 = dh1.cwiseProduct((h.array() > 0.0).cast<double>().matrix());
    gw(fc1) += dh1 * x;
    gb(fc1) += dh1.rowwise().sum();
  };

  pool_back(c.task_e, c.task_s, c.task_a, dpool_task, dtask_e, kTaskAtt1, kTaskAtt2);
  pool_back(c.robot_e, c.robot_s, c.robot_a, dpool_robot, drobot_e, kRobotAtt1, kRobotAtt2);
  extractor_back(in.tasks, c.task_h, dtask_e, kTaskFc1, kTaskFc2);
  extractor_back(in.robots, c.robot_h, drobot_e, kRobotFc1, kRobotFc2);
}

}  // namespace mrta
