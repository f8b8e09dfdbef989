#include "mrta/env.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

namespace mrta {

void EpisodeLog::finalize() {
  sum_trto = 0.0;
  sum_ttgt = 0.0;
  for (const auto& s : steps) {
    sum_trto += s.outcome.trto;
    sum_ttgt += s.outcome.ttgt;
  }
  total_cost = sum_trto + alpha * sum_ttgt;
}

void write_episode_log(std::ostream& out, const EpisodeLog& log) {
  for (const auto& s : log.steps) {
    nlohmann::ordered_json j;
    j["type"] = "decision";
    j["index"] = s.index;
    j["clock"] = s.clock;
    j["task_id"] = s.task_id;
    j["robot_id"] = s.robot_id;
    j["trto"] = s.outcome.trto;
    j["ttgt"] = s.outcome.ttgt;
    j["reward"] = s.outcome.reward;
    out << j.dump() << '\n';
  }
  nlohmann::ordered_json j;
  j["type"] = "summary";
  j["total_cost"] = log.total_cost;
  j["sum_trto"] = log.sum_trto;
  j["sum_ttgt"] = log.sum_ttgt;
  j["span"] = log.span;
  j["decisions"] = log.steps.size();
  j["min_pairwise_distance"] = log.min_pairwise_distance;  // null for a single robot
  j["stalled_arrivals"] = log.stalled_arrivals;
  j["charge_visits"] = log.charge_visits;
  out << j.dump() << '\n';
}

namespace {

bool is_travel(LegKind k) { return k != LegKind::kCharge; }

RobotPhase phase_of(const RobotState& r) {
  if (r.legs.empty()) return RobotPhase::kIdle;
  switch (r.legs.front().kind) {
    case LegKind::kToOrigin: return RobotPhase::kToOrigin;
    case LegKind::kToDestination: return RobotPhase::kToDestination;
    case LegKind::kToDock: return RobotPhase::kToDock;
    case LegKind::kCharge: return RobotPhase::kCharging;
  }
  return RobotPhase::kIdle;
}

void place_robots(WorldState& w) {
  const auto& cfg = w.cfg;
  std::mt19937_64 rng(cfg.seed);
  const double margin = std::min({1.0, cfg.width / 4.0, cfg.height / 4.0});
  std::uniform_real_distribution<double> ux(margin, cfg.width - margin);
  std::uniform_real_distribution<double> uy(margin, cfg.height - margin);
  std::uniform_real_distribution<double> uc(cfg.initial_charge_min, cfg.initial_charge_max);
  std::set<int> failed(cfg.failed_robots.begin(), cfg.failed_robots.end());
  for (int id = 0; id < cfg.n_robots; ++id) {
    RobotState r;
    r.id = id;
    bool placed = false;
    for (int attempt = 0; attempt < 100000 && !placed; ++attempt) {
      const Vec2 p(ux(rng), uy(rng));
      placed = std::all_of(w.robots.begin(), w.robots.end(), [&](const RobotState& o) {
        return (o.position - p).norm() >= cfg.d_min;
      });
      if (placed) r.position = p;
    }
    if (!placed) throw ValidationError("make_world: cannot place robots at separation d_min");
    r.charge = cfg.initial_charge_min == cfg.initial_charge_max ? cfg.initial_charge_min : uc(rng);
    r.failed = failed.count(id) > 0;
    w.robots.push_back(r);
  }
}

void validate_dataset(const std::vector<Task>& tasks, const WorldConfig& cfg) {
  std::set<int> ids;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const Task& t = tasks[i];
    if (!ids.insert(t.id).second) {
      throw ValidationError("dataset: duplicate task id " + std::to_string(t.id));
    }
    if (t.id < 0) throw ValidationError("dataset: negative task id");
    if (!in_rectangle(t.origin, cfg.width, cfg.height) ||
        !in_rectangle(t.destination, cfg.width, cfg.height)) {
      throw ValidationError("dataset: task " + std::to_string(t.id) + " outside the warehouse");
    }
    if (!(t.arrival_time >= 0.0) || !std::isfinite(t.arrival_time)) {
      throw ValidationError("dataset: task " + std::to_string(t.id) + " has invalid arrival time");
    }
    if (i > 0) {
      const Task& p = tasks[i - 1];
      if (t.arrival_time < p.arrival_time ||
          (t.arrival_time == p.arrival_time && t.id < p.id)) {
        throw ValidationError("dataset: tasks not sorted by (arrival, id)");
      }
    }
  }
}

// Reserves a dock for an activated dock leg and points the paired charge leg
// at it. Returns false when every dock is occupied.
bool resolve_dock(WorldState& w, RobotState& r) {
  Leg& leg = r.legs.front();
  if (leg.dock >= 0) return true;
  const int dock = nearest_dock(w, r.position, true);
  if (dock < 0) return false;
  w.docks[dock].occupant = r.id;
  leg.dock = dock;
  leg.target = w.docks[dock].position;
  if (r.legs.size() > 1 && r.legs[1].kind == LegKind::kCharge) {
    r.legs[1].dock = dock;
    r.legs[1].target = leg.target;
  }
  return true;
}

void push_charge_detour(WorldState& w, RobotState& r, bool front) {
  const int guess = nearest_dock(w, r.legs.empty() || front ? r.position : r.legs.back().target,
                                 false);
  Leg to_dock{LegKind::kToDock, w.docks[guess].position, -1, -1};
  Leg charge{LegKind::kCharge, w.docks[guess].position, -1, -1};
  if (front) {
    r.legs.insert(r.legs.begin(), {to_dock, charge});
  } else {
    r.legs.push_back(to_dock);
    r.legs.push_back(charge);
  }
}

// Brings bookkeeping in line with the (possibly new) active leg.
void activate_front(WorldState& w, RobotState& r) {
  r.best_distance = std::numeric_limits<double>::infinity();
  r.best_distance_at = w.clock;
  if (!r.legs.empty()) {
    Leg& leg = r.legs.front();
    if (leg.kind == LegKind::kToOrigin) {
      // Enough charge to finish the job from here, or charge first.
      const Task& t = w.task(leg.task_id);
      const double need = w.cfg.discharge_rate *
                          ((r.position - t.origin).norm() + (t.origin - t.destination).norm()) /
                          w.cfg.v_max;
      if (r.charge - need < 0.0) {
        push_charge_detour(w, r, true);
        activate_front(w, r);
        return;
      }
      w.task(leg.task_id).status = TaskStatus::kExecuting;
    } else if (leg.kind == LegKind::kToDock) {
      resolve_dock(w, r);
    }
  }
  r.phase = phase_of(r);
  r.assignment.reset();
  for (const Leg& leg : r.legs) {
    if (leg.task_id >= 0) {
      r.assignment = leg.task_id;
      break;
    }
  }
}

void refresh_free_at(WorldState& w) {
  for (auto& r : w.robots) r.free_at = project_itinerary(r, w).time;
}

}  // namespace

WorldState make_world(std::vector<Task> dataset, const WorldConfig& cfg) {
  cfg.validate();
  validate_dataset(dataset, cfg);
  WorldState w;
  w.cfg = cfg;
  w.gain = nav::gain_from_config(cfg);
  w.log.alpha = cfg.alpha;
  w.log.min_pairwise_distance = std::numeric_limits<double>::infinity();
  int max_id = -1;
  for (auto& t : dataset) {
    t.status = TaskStatus::kPending;
    t.is_duplicate = false;
    t.source_id = -1;
    t.stamp_time = t.arrival_time;
    max_id = std::max(max_id, t.id);
  }
  w.tasks = std::move(dataset);
  for (std::size_t i = 0; i < w.tasks.size(); ++i) w.task_slot[w.tasks[i].id] = i;
  w.next_duplicate_id = max_id + 1;
  for (const auto& p : cfg.effective_docks()) w.docks.push_back(Dock{p, -1});
  place_robots(w);
  refresh_free_at(w);
  return w;
}

Observation observe(const WorldState& w) {
  Observation obs;
  obs.clock = w.clock;
  obs.tasks.reserve(w.la.size());
  for (const auto& t : w.la) obs.tasks.push_back(task_feature(t).as_array());
  obs.robots.reserve(w.robots.size());
  obs.masked.reserve(w.robots.size());
  for (const auto& r : w.robots) {
    obs.robots.push_back(robot_feature(r, w.clock, w.cfg.r_mask).as_array());
    obs.masked.push_back(r.failed);
  }
  return obs;
}

void ingest_arrivals(WorldState& w) {
  while (w.next_arrival < w.tasks.size() && w.tasks[w.next_arrival].arrival_time <= w.clock) {
    Task& t = w.tasks[w.next_arrival++];
    t.status = TaskStatus::kPending;
    w.buffer.push_back(t.id);
  }
  const auto la_len = static_cast<std::size_t>(w.cfg.la_len);
  auto admit = [&w]() {
    Task& t = w.task(w.buffer.front());
    w.buffer.pop_front();
    t.status = TaskStatus::kInLookahead;
    t.stamp_time = w.clock;
    w.la.push_back(t);
  };
  // Real tasks take the place of placeholder duplicates.
  while (!w.buffer.empty()) {
    auto dup = std::find_if(w.la.rbegin(), w.la.rend(), [](const Task& t) { return t.is_duplicate; });
    if (dup == w.la.rend()) break;
    w.la.erase(std::next(dup).base());
    admit();
  }
  while (w.la.size() < la_len && !w.buffer.empty()) admit();
  while (!w.la.empty() && w.la.size() < la_len) {
    const auto oldest = std::min_element(w.la.begin(), w.la.end(), [](const Task& a, const Task& b) {
      return a.stamp_time != b.stamp_time ? a.stamp_time < b.stamp_time : a.id < b.id;
    });
    Task copy = *oldest;
    copy.source_id = oldest->family();
    copy.is_duplicate = true;
    copy.id = w.next_duplicate_id++;
    w.la.push_back(copy);
  }
}

ItineraryEnd project_itinerary(const RobotState& robot, const WorldState& w) {
  const auto& cfg = w.cfg;
  const double charge_rate = cfg.effective_charge_rate();
  ItineraryEnd end{w.clock, robot.position, robot.charge};
  for (const Leg& leg : robot.legs) {
    if (is_travel(leg.kind)) {
      const double dt = (end.position - leg.target).norm() / cfg.v_max;
      end.time += dt;
      end.charge = std::max(0.0, end.charge - cfg.discharge_rate * dt);
      end.position = leg.target;
    } else {
      if (charge_rate > 0.0) end.time += std::max(0.0, 1.0 - end.charge) / charge_rate;
      end.charge = 1.0;
      end.position = leg.target;
    }
  }
  return end;
}

int nearest_dock(const WorldState& w, const Vec2& from, bool available_only) {
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < w.docks.size(); ++k) {
    if (available_only && w.docks[k].occupant >= 0) continue;
    const double d = (w.docks[k].position - from).norm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(k);
    }
  }
  return best;
}

AssignmentPlan plan_assignment(const WorldState& w, int robot_id, const Task& task) {
  const auto& cfg = w.cfg;
  if (robot_id < 0 || robot_id >= static_cast<int>(w.robots.size())) {
    throw ValidationError("plan_assignment: robot id out of range");
  }
  const RobotState& r = w.robots[robot_id];
  const ItineraryEnd end = project_itinerary(r, w);
  AssignmentPlan plan;
  double t = end.time;
  Vec2 pos = end.position;
  double charge = end.charge;
  const double job = (distance(pos, task.origin) + distance(task.origin, task.destination)) / cfg.v_max;
  if (charge < cfg.charge_threshold || charge - cfg.discharge_rate * job < 0.0) {
    plan.charge_detour = true;
    plan.dock = nearest_dock(w, pos, false);
    const Vec2 dock = w.docks[plan.dock].position;
    const double travel = distance(pos, dock) / cfg.v_max;
    t += travel;
    charge = std::max(0.0, charge - cfg.discharge_rate * travel);
    const double rate = cfg.effective_charge_rate();
    if (rate > 0.0) t += (1.0 - charge) / rate;
    pos = dock;
  }
  plan.start_position = pos;
  plan.t_exec = t;
  plan.finish = t + (distance(pos, task.origin) + distance(task.origin, task.destination)) / cfg.v_max;
  return plan;
}

bool robot_assignable(const WorldState& w, const RobotState& r) {
  return !r.failed && r.legs.empty() && r.charge >= w.cfg.charge_threshold;
}

bool can_decide(const WorldState& w) {
  if (w.la.empty()) return false;
  return std::any_of(w.robots.begin(), w.robots.end(),
                     [&w](const RobotState& r) { return robot_assignable(w, r); });
}

bool episode_done(const WorldState& w) { return w.tasks_done == w.tasks.size(); }

StepOutcome apply_decision(WorldState& w, const Decision& d) {
  if (d.task_index < 0 || d.task_index >= static_cast<int>(w.la.size())) {
    throw ValidationError("apply_decision: task index " + std::to_string(d.task_index) +
                          " outside the look-ahead queue");
  }
  if (d.robot_id < 0 || d.robot_id >= static_cast<int>(w.robots.size())) {
    throw ValidationError("apply_decision: robot id out of range");
  }
  RobotState& r = w.robots[d.robot_id];
  if (r.failed) {
    throw ValidationError("apply_decision: robot " + std::to_string(r.id) + " is masked");
  }
  DecisionRecord rec;
  rec.index = static_cast<int>(w.log.steps.size());
  rec.clock = w.clock;
  rec.task_index = d.task_index;
  rec.robot_id = d.robot_id;
  rec.observation = observe(w);

  const int family = w.la[d.task_index].family();
  Task& task = w.task(family);
  const AssignmentPlan plan = plan_assignment(w, d.robot_id, task);

  StepOutcome out;
  out.t_exec = plan.t_exec;
  out.trto = distance(plan.start_position, task.origin);
  out.ttgt = plan.t_exec - task.stamp_time;
  out.reward = -out.trto - w.cfg.alpha * out.ttgt;

  const bool was_idle = r.legs.empty();
  if (plan.charge_detour) {
    r.legs.push_back(Leg{LegKind::kToDock, w.docks[plan.dock].position, -1, -1});
    r.legs.push_back(Leg{LegKind::kCharge, w.docks[plan.dock].position, -1, -1});
  }
  r.legs.push_back(Leg{LegKind::kToOrigin, task.origin, family, -1});
  r.legs.push_back(Leg{LegKind::kToDestination, task.destination, family, -1});
  task.status = TaskStatus::kAssigned;
  if (was_idle) {
    activate_front(w, r);
  } else {
    r.assignment = r.assignment.value_or(family);
  }
  r.free_at = project_itinerary(r, w).time;

  std::erase_if(w.la, [family](const Task& t) { return t.family() == family; });

  rec.task_id = family;
  rec.outcome = out;
  w.log.steps.push_back(std::move(rec));
  ingest_arrivals(w);
  return out;
}

void advance(WorldState& w, const StepObserver& observer) {
  const auto& cfg = w.cfg;
  const std::size_t n = w.robots.size();

  nav::FleetSnapshot fleet(n);
  for (std::size_t i = 0; i < n; ++i) {
    fleet[i] = nav::RobotKinematics{w.robots[i].id, w.robots[i].position, w.robots[i].velocity};
  }
  const std::vector<Vec2> rep = nav::apf_forces(fleet, cfg.d_min, cfg.k_rep);

  std::vector<nav::NavCommand> commands(n);
  for (std::size_t i = 0; i < n; ++i) {
    RobotState& r = w.robots[i];
    bool tracking = false;
    Vec2 target = r.position;
    if (!r.failed && !r.legs.empty()) {
      Leg& leg = r.legs.front();
      if (leg.kind != LegKind::kToDock || resolve_dock(w, r)) {
        tracking = true;
        target = leg.target;
      }
    }
    commands[i] = tracking ? nav::tracking_command(fleet[i], nav::Target{target, Vec2::Zero()},
                                                   w.gain, rep[i], cfg)
                           : nav::yield_command(fleet[i], w.gain, rep[i], cfg);
  }
  fleet = nav::step_dynamics(fleet, commands, cfg.dt, cfg.v_max, cfg.width, cfg.height);
  w.log.min_pairwise_distance =
      std::min(w.log.min_pairwise_distance, nav::min_pairwise_distance(fleet));

  ++w.step;
  w.clock = static_cast<double>(w.step) * cfg.dt;

  const double charge_rate = cfg.effective_charge_rate();
  for (std::size_t i = 0; i < n; ++i) {
    RobotState& r = w.robots[i];
    r.position = fleet[i].position;
    r.velocity = fleet[i].velocity;
    if (r.failed) continue;

    if (!r.legs.empty()) {
      const Leg& leg = r.legs.front();
      const bool moving = is_travel(leg.kind) && (leg.kind != LegKind::kToDock || leg.dock >= 0);
      if (moving) {
        r.charge = std::max(0.0, r.charge - cfg.discharge_rate * cfg.dt);
      } else if (leg.kind == LegKind::kCharge) {
        r.charge = std::min(1.0, r.charge + charge_rate * cfg.dt);
      }
    }

    if (r.legs.empty()) {
      if (r.charge < cfg.charge_threshold) {
        push_charge_detour(w, r, true);
        activate_front(w, r);
      }
      continue;
    }

    Leg& leg = r.legs.front();
    if (leg.kind == LegKind::kCharge) {
      if (r.charge >= 1.0) {
        r.charge = 1.0;
        if (leg.dock >= 0) w.docks[leg.dock].occupant = -1;
        r.legs.erase(r.legs.begin());
        activate_front(w, r);
      }
      continue;
    }
    if (leg.kind == LegKind::kToDock && leg.dock < 0) continue;  // waiting for a free dock

    const double dist = (r.position - leg.target).norm();
    bool arrived = dist <= cfg.arrival_radius && r.velocity.norm() <= cfg.arrival_speed;
    if (!arrived) {
      if (dist < r.best_distance - 0.01) {
        r.best_distance = dist;
        r.best_distance_at = w.clock;
      } else if (dist <= cfg.d_min && w.clock - r.best_distance_at >= cfg.stall_window) {
        // Blocked by a neighbour sitting on the target.
        arrived = true;
        ++w.log.stalled_arrivals;
      }
    }
    if (!arrived) continue;

    const LegKind done = leg.kind;
    const int task_id = leg.task_id;
    r.legs.erase(r.legs.begin());
    if (done == LegKind::kToDestination) {
      Task& t = w.task(task_id);
      t.status = TaskStatus::kDone;
      ++w.tasks_done;
      w.log.span = w.clock;
      const bool docking_next = !r.legs.empty() && r.legs.front().kind == LegKind::kToDock;
      if (r.charge < cfg.charge_threshold && !docking_next) push_charge_detour(w, r, true);
    } else if (done == LegKind::kToDock) {
      ++w.log.charge_visits;
    }
    activate_front(w, r);
  }
  refresh_free_at(w);
  if (observer) observer(w, commands);
}

namespace {

// Skips empty time before the next arrival when nothing can move.
void fast_forward(WorldState& w) {
  if (w.next_arrival >= w.tasks.size() || !w.la.empty() || !w.buffer.empty()) return;
  for (const auto& r : w.robots) {
    if (!r.legs.empty() || r.velocity.norm() > 1e-3) return;
  }
  for (std::size_t i = 0; i < w.robots.size(); ++i) {
    for (std::size_t j = i + 1; j < w.robots.size(); ++j) {
      if ((w.robots[i].position - w.robots[j].position).norm() < w.cfg.d_min) return;
    }
  }
  const double next = w.tasks[w.next_arrival].arrival_time;
  const auto target_step = static_cast<long long>(std::floor(next / w.cfg.dt)) - 1;
  if (target_step <= w.step) return;
  for (auto& r : w.robots) {
    if (r.charge < w.cfg.charge_threshold && !r.failed) return;
  }
  for (auto& r : w.robots) r.velocity = Vec2::Zero();
  w.step = target_step;
  w.clock = static_cast<double>(w.step) * w.cfg.dt;
  refresh_free_at(w);
}

}  // namespace

EpisodeLog run_episode(const std::vector<Task>& dataset, Dispatcher& dispatcher,
                       const WorldConfig& cfg, const StepObserver& observer) {
  WorldState w = make_world(dataset, cfg);
  while (true) {
    ingest_arrivals(w);
    while (can_decide(w)) {
      Decision d = dispatcher.decide(w);
      d.decided_at = w.clock;
      apply_decision(w, d);
    }
    if (episode_done(w)) break;
    if (w.clock > cfg.horizon) {
      std::ostringstream msg;
      msg << "run_episode: horizon " << cfg.horizon << " exceeded with "
          << (w.tasks.size() - w.tasks_done) << " tasks outstanding (la " << w.la.size()
          << ", buffer " << w.buffer.size() << ")";
      throw LivelockError(msg.str());
    }
    fast_forward(w);
    advance(w, observer);
  }
  w.log.finalize();
  return std::move(w.log);
}

}  // namespace mrta
