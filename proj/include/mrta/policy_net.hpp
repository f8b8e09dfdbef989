#ifndef MRTA_POLICY_NET_HPP_
#define MRTA_POLICY_NET_HPP_

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "mrta/domain.hpp"
#include "mrta/env.hpp"

namespace mrta {

enum class Role : std::uint8_t { kPlanner = 0, kExecutor = 1 };

const char* to_string(Role r);

struct LayerShape {
  int in = 0;
  int out = 0;
  friend bool operator==(const LayerShape&, const LayerShape&) = default;
};

// Normalized network input for one decision.
struct NetInput {
  Eigen::MatrixXd tasks;   // la_len x 6
  Eigen::MatrixXd robots;  // n_robots x 4
  std::vector<bool> masked;
  int selected_task = -1;  // executor only
};

// Feature scaling shared by both agents. Task rows become
// (o/W, d/W, k/diag, waited/T) with waited = clock - l and T = diag / v_max.
// Robot rows become (p/W, min(r/T, r_clip), c); the executor sees robot
// positions relative to the selected task origin.
struct FeatureScales {
  double width = 64.0;
  double height = 64.0;
  double diagonal = 90.50966799187809;
  double time_scale = 45.254833995939045;
  double r_clip = 10.0;

  static FeatureScales from_config(const WorldConfig& cfg);
};

NetInput planner_input(const Observation& obs, const FeatureScales& s);
NetInput executor_input(const Observation& obs, int selected_task, const FeatureScales& s);

// Scoring network shared by the Planner and the Executor.
//
//   task extractor    6 -> 16 -> 16  (ReLU between)       E_i
//   robot extractor   4 -> 16 -> 16  (ReLU between)       E_j
//   attention heads  16 -> 16 -> 1  (Tanh, then Sigmoid)  a_i, a_j
//   scorer           48 -> 8 -> 1   (ReLU between)        one logit per candidate
//   value head       32 -> 16 -> 1  (ReLU between)        state value
//
// The Planner scores every look-ahead task with [sum a_j E_j, sum a_i E_i, E_i].
// The Executor scores every robot with [sum a_j E_j, E_selected, E_j], masking
// failed robots out of the softmax. The value head reads the two pooled
// contexts. The first ten layers are the policy parameters; the last two are
// the value parameters.
class PolicyNet {
 public:
  static constexpr int kEmbed = 16;
  static constexpr int kScoreHidden = 8;
  static constexpr int kValueHidden = 16;

  enum Layer : int {
    kTaskFc1 = 0,
    kTaskFc2,
    kRobotFc1,
    kRobotFc2,
    kTaskAtt1,
    kTaskAtt2,
    kRobotAtt1,
    kRobotAtt2,
    kScoreFc1,
    kScoreFc2,
    kValueFc1,
    kValueFc2,
    kLayerCount
  };

  static const std::array<LayerShape, kLayerCount>& shapes();
  static std::size_t parameter_count();
  static std::size_t policy_parameter_count();

  explicit PolicyNet(Role role = Role::kPlanner);

  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  void init(std::uint64_t seed);

  Role role() const { return role_; }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  Eigen::Map<const Eigen::MatrixXd> weight(Layer l) const;
  Eigen::Map<const Eigen::VectorXd> bias(Layer l) const;

  struct Output {
    Eigen::VectorXd logits;
    Eigen::VectorXd probs;
    Eigen::VectorXd log_probs;  // -inf for masked candidates
    double value = 0.0;
  };

  Output forward(const NetInput& in) const;

  // Adds d(loss)/d(params) to grad, given d(loss)/d(logits) and d(loss)/d(value).
  void backward(const NetInput& in, const Eigen::VectorXd& dlogits, double dvalue,
                std::span<double> grad) const;

  friend bool operator==(const PolicyNet& a, const PolicyNet& b) {
    return a.role_ == b.role_ && a.params_ == b.params_;
  }

 private:
  struct Cache;
  Cache run(const NetInput& in) const;
  void check_input(const NetInput& in) const;

  static std::size_t offset(Layer l);

  Role role_;
  std::vector<double> params_;
};

}  // namespace mrta

#endif  // MRTA_POLICY_NET_HPP_
