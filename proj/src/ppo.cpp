#include "mrta/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mrta {

Targets compute_targets(const Trajectory& traj, double gamma, double lambda, double reward_scale) {
  const std::size_t n = traj.samples.size();
  Targets t;
  t.returns.assign(n, 0.0);
  t.advantages.assign(n, 0.0);
  double ret = 0.0;
  double gae = 0.0;
  double next_value = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    const Sample& s = traj.samples[k];
    const double r = reward_scale * s.reward;
    const double keep = s.done ? 0.0 : 1.0;
    if (s.done) {
      ret = 0.0;
      gae = 0.0;
      next_value = 0.0;
    }
    ret = r + gamma * keep * ret;
    const double delta = r + gamma * keep * next_value - s.value;
    gae = delta + gamma * lambda * keep * gae;
    t.returns[k] = ret;
    t.advantages[k] = gae;
    next_value = s.value;
  }
  return t;
}

void normalize(std::vector<double>& v) {
  if (v.empty()) return;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= static_cast<double>(v.size());
  const double sd = std::sqrt(var);
  for (double& x : v) x = (x - mean) / (sd + 1e-8);
}

LossStats ppo_loss(const PolicyNet& net, std::span<const BatchItem> batch, const PpoConfig& cfg,
                   std::span<double> grad) {
  LossStats stats;
  if (batch.empty()) return stats;
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (const BatchItem& item : batch) {
    const Sample& s = *item.sample;
    const PolicyNet::Output out = net.forward(s.input);
    const Eigen::Index k = out.logits.size();
    if (s.action < 0 || s.action >= k || out.probs(s.action) == 0.0) {
      throw ValidationError("ppo_loss: action outside the support of the policy");
    }
    const double lp = out.log_probs(s.action);
    const double ratio = std::exp(lp - s.log_prob);
    const double a = item.advantage;
    const double clipped = std::clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip);
    const double surr1 = ratio * a;
    const double surr2 = clipped * a;
    const bool unclipped_active = surr1 <= surr2;
    double entropy = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) {
      if (out.probs(i) > 0.0) entropy -= out.probs(i) * out.log_probs(i);
    }
    const double verr = out.value - item.target;

    stats.policy_loss -= std::min(surr1, surr2) * inv_b;
    stats.entropy += entropy * inv_b;
    stats.value_loss += verr * verr * inv_b;
    if (!unclipped_active) stats.clip_fraction += inv_b;

    if (!grad.empty()) {
      Eigen::VectorXd dlogits = Eigen::VectorXd::Zero(k);
      for (Eigen::Index i = 0; i < k; ++i) {
        if (out.probs(i) == 0.0) continue;
        const double p = out.probs(i);
        double g = 0.0;
        if (unclipped_active) g -= surr1 * ((i == s.action ? 1.0 : 0.0) - p);
        // d(-c H)/dz_i = c p_i (log p_i + H)
        g += cfg.entropy_coef * p * (out.log_probs(i) + entropy);
        dlogits(i) = g * inv_b;
      }
      const double dvalue = 2.0 * cfg.value_coef * verr * inv_b;
      net.backward(s.input, dlogits, dvalue, grad);
    }
  }
  stats.total = stats.policy_loss - cfg.entropy_coef * stats.entropy + cfg.value_coef * stats.value_loss;
  return stats;
}

Adam::Adam(std::size_t n, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) {
    throw ValidationError("Adam::step: size mismatch");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    const double mhat = m_[i] / c1;
    const double vhat = v_[i] / c2;
    params[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
  }
}

LossStats ppo_update(PolicyNet& net, Adam& opt, const std::vector<Trajectory>& batch,
                     const PpoConfig& cfg, std::mt19937_64& rng) {
  std::vector<BatchItem> items;
  std::vector<double> advantages;
  for (const auto& traj : batch) {
    const Targets t = compute_targets(traj, cfg.gamma, cfg.lambda, cfg.reward_scale);
    for (std::size_t k = 0; k < traj.samples.size(); ++k) {
      items.push_back(BatchItem{&traj.samples[k], 0.0, t.returns[k]});
      advantages.push_back(t.advantages[k]);
    }
  }
  LossStats mean;
  if (items.empty()) return mean;
  if (cfg.normalize_advantages) normalize(advantages);
  for (std::size_t k = 0; k < items.size(); ++k) items[k].advantage = advantages[k];

  const auto mb = static_cast<std::size_t>(std::max(1, cfg.batch_size));
  std::vector<std::size_t> order(items.size());
  std::vector<BatchItem> minibatch;
  std::vector<double> grad(net.params().size());
  int updates = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += mb) {
      const std::size_t end = std::min(order.size(), start + mb);
      minibatch.clear();
      for (std::size_t k = start; k < end; ++k) minibatch.push_back(items[order[k]]);
      std::fill(grad.begin(), grad.end(), 0.0);
      const LossStats s = ppo_loss(net, minibatch, cfg, grad);
      const bool finite = std::isfinite(s.total) &&
                          std::all_of(grad.begin(), grad.end(), [](double g) { return std::isfinite(g); });
      if (!finite) {
        throw DivergenceError("ppo_update: non-finite loss or gradient",
                              std::vector<double>(net.params().begin(), net.params().end()));
      }
      opt.step(net.params(), grad);
      mean.policy_loss += s.policy_loss;
      mean.value_loss += s.value_loss;
      mean.entropy += s.entropy;
      mean.clip_fraction += s.clip_fraction;
      mean.total += s.total;
      ++updates;
    }
  }
  const double inv = 1.0 / static_cast<double>(updates);
  mean.policy_loss *= inv;
  mean.value_loss *= inv;
  mean.entropy *= inv;
  mean.clip_fraction *= inv;
  mean.total *= inv;
  return mean;
}

}  // namespace mrta
