#ifndef MRTA_PPO_HPP_
#define MRTA_PPO_HPP_

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "mrta/policy_net.hpp"

namespace mrta {

struct PpoConfig {
  double gamma = 0.99;
  double lambda = 0.95;
  double learning_rate = 3e-4;
  double entropy_coef = 0.001;
  double value_coef = 0.0002;
  int batch_size = 32;
  double clip = 0.2;
  int epochs = 4;
  // Rewards are multiplied by this before returns and advantages are formed.
  double reward_scale = 0.01;
  bool normalize_advantages = true;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
};

struct Sample {
  NetInput input;
  int action = 0;
  double log_prob = 0.0;  // under the behaviour policy
  double value = 0.0;     // value estimate at collection time
  double reward = 0.0;
  bool done = false;
};

struct Trajectory {
  std::vector<Sample> samples;
};

// Discounted rewards-to-go and GAE(lambda) advantages for one trajectory.
// A terminal sample bootstraps from zero.
struct Targets {
  std::vector<double> returns;
  std::vector<double> advantages;
};

Targets compute_targets(const Trajectory& traj, double gamma, double lambda,
                        double reward_scale);

// In place: zero mean, unit variance. Leaves a constant vector at zero.
void normalize(std::vector<double>& v);

struct LossStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double total = 0.0;
};

struct BatchItem {
  const Sample* sample = nullptr;
  double advantage = 0.0;
  double target = 0.0;  // value regression target
};

// Mean PPO-Clip loss over the batch:
//   -min(rho A, clip(rho, 1-eps, 1+eps) A) - c_H H(pi) + c_V (V - R)^2.
// When grad is non-empty the parameter gradient is accumulated into it.
LossStats ppo_loss(const PolicyNet& net, std::span<const BatchItem> batch, const PpoConfig& cfg,
                   std::span<double> grad = {});

class Adam {
 public:
  Adam() = default;
  Adam(std::size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  // Descends along grad.
  void step(std::span<double> params, std::span<const double> grad);

  long long steps() const { return t_; }

 private:
  double lr_ = 3e-4, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  long long t_ = 0;
  std::vector<double> m_, v_;
};

// Raised when a loss turns non-finite. Carries the parameters as they were
// before the failing update.
struct DivergenceError : NumericalError {
  DivergenceError(const std::string& what, std::vector<double> snapshot)
      : NumericalError(what), snapshot(std::move(snapshot)) {}
  std::vector<double> snapshot;
};

// Epochs of shuffled minibatch Adam steps over all samples in the batch.
LossStats ppo_update(PolicyNet& net, Adam& opt, const std::vector<Trajectory>& batch,
                     const PpoConfig& cfg, std::mt19937_64& rng);

}  // namespace mrta

#endif  // MRTA_PPO_HPP_
