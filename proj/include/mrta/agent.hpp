#ifndef MRTA_AGENT_HPP_
#define MRTA_AGENT_HPP_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <vector>

#include "mrta/env.hpp"
#include "mrta/policy_net.hpp"
#include "mrta/ppo.hpp"

namespace mrta {

enum class ActionMode : std::uint8_t { kSample, kGreedy };

// Samples an index from probs with one uniform draw (inverse CDF).
int sample_categorical(const Eigen::VectorXd& probs, std::mt19937_64& rng);
int argmax(const Eigen::VectorXd& probs);

// Bi-level dispatcher: the Planner picks a look-ahead task, then the Executor
// picks a robot for it. Either agent can record its decisions for training.
class AgentDispatcher final : public Dispatcher {
 public:
  AgentDispatcher(const PolicyNet& planner, const PolicyNet& executor, const FeatureScales& scales,
                  std::uint64_t seed, ActionMode mode = ActionMode::kSample);

  void record(Role role, bool on);

  Decision decide(const WorldState& w) override;

  // Recorded samples, in decision order. Rewards are filled in by
  // attach_rewards once the episode log exists.
  Trajectory& trajectory(Role role) { return role == Role::kPlanner ? planner_traj_ : executor_traj_; }
  void attach_rewards(const EpisodeLog& log);

 private:
  const PolicyNet& planner_;
  const PolicyNet& executor_;
  FeatureScales scales_;
  std::mt19937_64 rng_;
  ActionMode mode_;
  bool record_planner_ = false;
  bool record_executor_ = false;
  Trajectory planner_traj_;
  Trajectory executor_traj_;
};

// Alternation: cycle c trains the Planner when c is even and the Executor
// when c is odd; the other agent only acts. `only` pins every cycle to one
// agent (e.g. retraining the Executor for a different fleet size).
struct TrainSchedule {
  int cycles = 24;
  int episodes_per_cycle = 40;
  std::optional<Role> only;

  Role active(int cycle) const {
    if (only) return *only;
    return cycle % 2 == 0 ? Role::kPlanner : Role::kExecutor;
  }
  int total_episodes() const { return cycles * episodes_per_cycle; }
};

struct TrainConfig {
  TrainSchedule schedule;
  PpoConfig ppo;
  std::uint64_t seed = 0;
  // A fresh task list every `dataset_refresh` episodes.
  int dataset_refresh = 1;
};

struct CurvePoint {
  int episode = 0;
  int cycle = 0;
  Role active = Role::kPlanner;
  double mean_reward = 0.0;   // mean step reward over the episode
  double total_reward = 0.0;  // sum of step rewards
  double total_cost = 0.0;
  LossStats loss;
};

// Training-curve export: episode,mean_reward,policy_loss,value_loss,entropy
void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve);

using DatasetFactory = std::function<std::vector<Task>(int refresh_index)>;

struct TrainResult {
  PolicyNet planner{Role::kPlanner};
  PolicyNet executor{Role::kExecutor};
  std::vector<CurvePoint> curve;
};

// Called after every episode with both networks. Exposed for checks on the
// freeze contract.
using EpisodeCallback = std::function<void(int episode, int cycle, const PolicyNet& planner,
                                           const PolicyNet& executor)>;

TrainResult self_play_train(const WorldConfig& world, const TrainConfig& train,
                            const DatasetFactory& datasets, const EpisodeCallback& callback = {});

// Continues training from existing parameters (e.g. retraining only the
// Executor for a larger fleet).
TrainResult self_play_train(const WorldConfig& world, const TrainConfig& train,
                            const DatasetFactory& datasets, PolicyNet planner, PolicyNet executor,
                            const EpisodeCallback& callback = {});

}  // namespace mrta

#endif  // MRTA_AGENT_HPP_
