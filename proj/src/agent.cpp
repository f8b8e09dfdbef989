#include "mrta/agent.hpp"

#include <cmath>
#include <ostream>

namespace mrta {

int sample_categorical(const Eigen::VectorXd& probs, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double draw = u(rng);
  double acc = 0.0;
  int last = -1;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    if (probs(i) <= 0.0) continue;
    acc += probs(i);
    last = static_cast<int>(i);
    if (draw < acc) return last;
  }
  if (last < 0) throw ValidationError("sample_categorical: empty support");
  return last;
}

int argmax(const Eigen::VectorXd& probs) {
  Eigen::Index best = 0;
  probs.maxCoeff(&best);
  return static_cast<int>(best);
}

AgentDispatcher::AgentDispatcher(const PolicyNet& planner, const PolicyNet& executor,
                                 const FeatureScales& scales, std::uint64_t seed, ActionMode mode)
    : planner_(planner), executor_(executor), scales_(scales), rng_(seed), mode_(mode) {
  if (planner.role() != Role::kPlanner || executor.role() != Role::kExecutor) {
    throw ValidationError("AgentDispatcher: networks passed in the wrong roles");
  }
}

void AgentDispatcher::record(Role role, bool on) {
  (role == Role::kPlanner ? record_planner_ : record_executor_) = on;
}

Decision AgentDispatcher::decide(const WorldState& w) {
  const Observation obs = observe(w);
  auto pick = [this](const PolicyNet::Output& out) {
    return mode_ == ActionMode::kGreedy ? argmax(out.probs) : sample_categorical(out.probs, rng_);
  };

  NetInput pin = planner_input(obs, scales_);
  const PolicyNet::Output pout = planner_.forward(pin);
  const int task = pick(pout);

  NetInput ein = executor_input(obs, task, scales_);
  const PolicyNet::Output eout = executor_.forward(ein);
  const int robot = pick(eout);

  if (record_planner_) {
    planner_traj_.samples.push_back(Sample{std::move(pin), task, pout.log_probs(task), pout.value, 0.0, false});
  }
  if (record_executor_) {
    executor_traj_.samples.push_back(
        Sample{std::move(ein), robot, eout.log_probs(robot), eout.value, 0.0, false});
  }
  return Decision{task, robot, w.clock};
}

void AgentDispatcher::attach_rewards(const EpisodeLog& log) {
  for (Trajectory* traj : {&planner_traj_, &executor_traj_}) {
    if (traj->samples.empty()) continue;
    if (traj->samples.size() != log.steps.size()) {
      throw ValidationError("attach_rewards: trajectory and log lengths differ");
    }
    for (std::size_t k = 0; k < log.steps.size(); ++k) {
      traj->samples[k].reward = log.steps[k].outcome.reward;
      traj->samples[k].done = k + 1 == log.steps.size();
    }
  }
}

void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve) {
  const auto prec = out.precision();
  out.precision(17);
  out << "episode,mean_reward,policy_loss,value_loss,entropy\n";
  for (const auto& p : curve) {
    out << p.episode << ',' << p.mean_reward << ',' << p.loss.policy_loss << ',' << p.loss.value_loss
        << ',' << p.loss.entropy << '\n';
  }
  out.precision(prec);
}

TrainResult self_play_train(const WorldConfig& world, const TrainConfig& train,
                            const DatasetFactory& datasets, const EpisodeCallback& callback) {
  PolicyNet planner(Role::kPlanner);
  PolicyNet executor(Role::kExecutor);
  planner.init(derive_seed(train.seed, 1));
  executor.init(derive_seed(train.seed, 2));
  return self_play_train(world, train, datasets, std::move(planner), std::move(executor), callback);
}

TrainResult self_play_train(const WorldConfig& world, const TrainConfig& train,
                            const DatasetFactory& datasets, PolicyNet planner, PolicyNet executor,
                            const EpisodeCallback& callback) {
  if (train.schedule.cycles < 0 || train.schedule.episodes_per_cycle < 1) {
    throw ValidationError("self_play_train: invalid schedule");
  }
  if (train.dataset_refresh < 1) throw ValidationError("self_play_train: dataset_refresh must be >= 1");
  world.validate();

  TrainResult result;
  result.planner = std::move(planner);
  result.executor = std::move(executor);
  const auto n_params = PolicyNet::parameter_count();
  Adam planner_opt(n_params, train.ppo.learning_rate, train.ppo.adam_beta1, train.ppo.adam_beta2,
                   train.ppo.adam_eps);
  Adam executor_opt = planner_opt;
  std::mt19937_64 shuffle_rng(derive_seed(train.seed, 3));
  const FeatureScales scales = FeatureScales::from_config(world);

  int cached_refresh = -1;
  std::vector<Task> dataset;
  for (int cycle = 0; cycle < train.schedule.cycles; ++cycle) {
    const Role active = train.schedule.active(cycle);
    for (int k = 0; k < train.schedule.episodes_per_cycle; ++k) {
      const int episode = cycle * train.schedule.episodes_per_cycle + k;
      const int refresh = episode / train.dataset_refresh;
      if (refresh != cached_refresh) {
        dataset = datasets(refresh);
        cached_refresh = refresh;
      }
      WorldConfig episode_world = world;
      episode_world.seed = derive_seed(world.seed, static_cast<std::uint64_t>(episode) + 101);

      AgentDispatcher dispatcher(result.planner, result.executor, scales,
                                 derive_seed(train.seed, static_cast<std::uint64_t>(episode) + 1001));
      dispatcher.record(active, true);
      const EpisodeLog log = run_episode(dataset, dispatcher, episode_world);
      dispatcher.attach_rewards(log);

      CurvePoint point;
      point.episode = episode;
      point.cycle = cycle;
      point.active = active;
      for (const auto& s : log.steps) point.total_reward += s.outcome.reward;
      point.mean_reward = log.steps.empty() ? 0.0 : point.total_reward / static_cast<double>(log.steps.size());
      point.total_cost = log.total_cost;

      PolicyNet& net = active == Role::kPlanner ? result.planner : result.executor;
      Adam& opt = active == Role::kPlanner ? planner_opt : executor_opt;
      const std::vector<Trajectory> batch{dispatcher.trajectory(active)};
      point.loss = ppo_update(net, opt, batch, train.ppo, shuffle_rng);
      result.curve.push_back(point);
      if (callback) callback(episode, cycle, result.planner, result.executor);
    }
  }
  return result;
}

}  // namespace mrta
