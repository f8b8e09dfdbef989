#ifndef MRTA_TESTS_SUPPORT_HPP_
#define MRTA_TESTS_SUPPORT_HPP_

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "mrta/baselines.hpp"
#include "mrta/env.hpp"
#include "mrta/policy_net.hpp"
#include "mrta/ppo.hpp"

namespace mrta::testing {

// Sum over close pairs of k/2 (1/d - 1/dmin)^2, written out independently.
inline double potential_oracle(const std::vector<Vec2>& p, double d_min, double k) {
  double u = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = i + 1; j < p.size(); ++j) {
      const double dx = p[i].x() - p[j].x();
      const double dy = p[i].y() - p[j].y();
      const double d = std::sqrt(dx * dx + dy * dy);
      if (d < d_min) u += 0.5 * k * (1.0 / d - 1.0 / d_min) * (1.0 / d - 1.0 / d_min);
    }
  }
  return u;
}

inline nav::FleetSnapshot fleet_of(const std::vector<Vec2>& p) {
  nav::FleetSnapshot f;
  for (std::size_t i = 0; i < p.size(); ++i) f.push_back(nav::RobotKinematics{static_cast<int>(i), p[i], Vec2::Zero()});
  return f;
}

inline NetInput random_input(Role role, int tasks, int robots, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  NetInput in;
  in.tasks = Eigen::MatrixXd(tasks, kTaskFeatureDim);
  in.robots = Eigen::MatrixXd(robots, kRobotFeatureDim);
  for (Eigen::Index i = 0; i < in.tasks.size(); ++i) in.tasks(i) = u(rng);
  for (Eigen::Index i = 0; i < in.robots.size(); ++i) in.robots(i) = 2.0 * u(rng) - 0.5;
  in.masked.assign(static_cast<std::size_t>(robots), false);
  if (role == Role::kExecutor) in.selected_task = static_cast<int>(rng() % static_cast<unsigned>(tasks));
  return in;
}

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
};

// Central differences of the total PPO loss against the analytic gradient,
// over every parameter. Relative error uses |g| + |fd| with a small floor so
// parameters with near-zero gradient are judged on absolute agreement. The
// default step sits near eps^(1/3), where truncation and round-off balance.
inline GradCheck check_ppo_gradient(PolicyNet net, const std::vector<BatchItem>& batch, const PpoConfig& cfg,
                                    double h = 1e-5, double floor = 1e-6) {
  std::vector<double> grad(PolicyNet::parameter_count(), 0.0);
  ppo_loss(net, batch, cfg, grad);
  GradCheck out;
  auto params = net.params();
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double saved = params[k];
    params[k] = saved + h;
    const double up = ppo_loss(net, batch, cfg).total;
    params[k] = saved - h;
    const double down = ppo_loss(net, batch, cfg).total;
    params[k] = saved;
    const double fd = (up - down) / (2.0 * h);
    const double rel = std::abs(grad[k] - fd) / std::max(floor, std::abs(grad[k]) + std::abs(fd));
    if (rel > out.max_rel_error) {
      out.max_rel_error = rel;
      out.worst_index = k;
    }
    ++out.checked;
  }
  return out;
}

// Builds a PPO batch whose behaviour log-probs sit strictly inside the clip
// region, away from the kinks of min() and clip().
inline std::vector<Sample> random_samples(const PolicyNet& net, int n, int tasks, int robots,
                                          std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Sample> out;
  for (int k = 0; k < n; ++k) {
    Sample s;
    s.input = random_input(net.role(), tasks, robots, rng);
    const auto o = net.forward(s.input);
    s.action = static_cast<int>(rng() % static_cast<unsigned>(o.probs.size()));
    // ratio in {0.9, 1.1}, both strictly inside [0.8, 1.2]
    s.log_prob = o.log_probs(s.action) + (k % 2 == 0 ? std::log(1.0 / 0.9) : std::log(1.0 / 1.1));
    s.value = o.value;
    s.reward = -u(rng);
    out.push_back(std::move(s));
  }
  return out;
}

// Exhaustive BFO reference: walks every itinerary leg by leg with its own
// arithmetic and returns the (task_index, robot) pair with minimum duration,
// earliest pair first on ties.
inline std::pair<int, int> bfo_oracle(const WorldState& w) {
  const auto& cfg = w.cfg;
  const double rate = cfg.charge_rate < 0.0 ? 16.0 * cfg.discharge_rate : cfg.charge_rate;
  double best = INFINITY;
  std::pair<int, int> pick{-1, -1};
  for (std::size_t i = 0; i < w.la.size(); ++i) {
    const Task& task = w.la[i];
    for (const auto& r : w.robots) {
      if (r.failed) continue;
      double t = w.clock;
      double x = r.position.x(), y = r.position.y(), c = r.charge;
      for (const Leg& leg : r.legs) {
        if (leg.kind == LegKind::kCharge) {
          t += (1.0 - c) / rate;
          c = 1.0;
        } else {
          const double d = std::hypot(leg.target.x() - x, leg.target.y() - y) / cfg.v_max;
          t += d;
          c = std::max(0.0, c - cfg.discharge_rate * d);
        }
        x = leg.target.x();
        y = leg.target.y();
      }
      const double job = (std::hypot(task.origin.x() - x, task.origin.y() - y) +
                          std::hypot(task.destination.x() - task.origin.x(), task.destination.y() - task.origin.y())) /
                         cfg.v_max;
      if (c < cfg.charge_threshold || c - cfg.discharge_rate * job < 0.0) {
        double bd = INFINITY;
        Vec2 dock;
        for (const auto& d : w.docks) {
          const double dd = std::hypot(d.position.x() - x, d.position.y() - y);
          if (dd < bd) {
            bd = dd;
            dock = d.position;
          }
        }
        t += bd / cfg.v_max;
        c = std::max(0.0, c - cfg.discharge_rate * bd / cfg.v_max);
        t += (1.0 - c) / rate;
        x = dock.x();
        y = dock.y();
      }
      t += (std::hypot(task.origin.x() - x, task.origin.y() - y) +
            std::hypot(task.destination.x() - task.origin.x(), task.destination.y() - task.origin.y())) /
           cfg.v_max;
      if (t - w.clock < best) {
        best = t - w.clock;
        pick = {static_cast<int>(i), r.id};
      }
    }
  }
  return pick;
}

// A random mid-episode world with at most `max_tasks` in the queue and
// `max_robots` robots, some busy, some low on charge, some failed.
inline WorldState random_world(std::mt19937_64& rng, int max_tasks, int max_robots) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  WorldConfig cfg;
  cfg.la_len = 1 + static_cast<int>(rng() % static_cast<unsigned>(max_tasks));
  cfg.n_robots = 1 + static_cast<int>(rng() % static_cast<unsigned>(max_robots));
  cfg.seed = rng();
  cfg.discharge_rate = 0.0005 + 0.01 * u(rng);
  if (cfg.n_robots > 1 && u(rng) < 0.2) cfg.failed_robots = {static_cast<int>(rng() % cfg.n_robots)};
  std::vector<Task> tasks;
  const int n = cfg.la_len + 4;
  for (int k = 0; k < n; ++k) {
    tasks.push_back(make_task(k, Vec2(64 * u(rng), 64 * u(rng)), Vec2(64 * u(rng), 64 * u(rng)),
                              static_cast<double>(k)));
  }
  WorldState w = make_world(tasks, cfg);
  w.clock = 3.0;
  ingest_arrivals(w);
  // A few random assignments so itineraries differ.
  const int pre = static_cast<int>(rng() % 3);
  for (int k = 0; k < pre && !w.la.empty(); ++k) {
    std::vector<int> alive;
    for (const auto& r : w.robots) {
      if (!r.failed) alive.push_back(r.id);
    }
    apply_decision(w, Decision{static_cast<int>(rng() % w.la.size()), alive[rng() % alive.size()], w.clock});
  }
  w.clock += 10.0 * u(rng);
  for (auto& r : w.robots) r.charge = 0.2 + 0.8 * u(rng);
  ingest_arrivals(w);
  return w;
}

}  // namespace mrta::testing

#endif  // MRTA_TESTS_SUPPORT_HPP_
