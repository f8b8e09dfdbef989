#include "mrta/baselines.hpp"

namespace mrta {

namespace {

void require_decidable(const WorldState& w, const char* who) {
  if (w.la.empty()) throw ValidationError(std::string(who) + ": look-ahead queue is empty");
  for (const auto& r : w.robots) {
    if (!r.failed) return;
  }
  throw ValidationError(std::string(who) + ": no unmasked robot");
}

}  // namespace

PairEstimate estimate_pair(const WorldState& w, int task_index, int robot_id) {
  const Task& t = w.la.at(static_cast<std::size_t>(task_index));
  const AssignmentPlan plan = plan_assignment(w, robot_id, t);
  return PairEstimate{task_index, robot_id, plan.t_exec, plan.finish - w.clock};
}

std::vector<PairEstimate> enumerate_pairs(const WorldState& w) {
  std::vector<PairEstimate> out;
  out.reserve(w.la.size() * w.robots.size());
  for (std::size_t i = 0; i < w.la.size(); ++i) {
    for (const auto& r : w.robots) {
      if (r.failed) continue;
      out.push_back(estimate_pair(w, static_cast<int>(i), r.id));
    }
  }
  return out;
}

Decision bfo_decide(const WorldState& w) {
  require_decidable(w, "bfo_decide");
  const auto pairs = enumerate_pairs(w);
  const PairEstimate* best = &pairs.front();
  for (const auto& p : pairs) {
    // Enumeration order is already (task_index, robot_id) ascending.
    if (p.est_exec_duration < best->est_exec_duration) best = &p;
  }
  return Decision{best->task_index, best->robot_id, w.clock};
}

Decision fifo_decide(const WorldState& w) {
  require_decidable(w, "fifo_decide");
  std::size_t oldest = 0;
  for (std::size_t i = 1; i < w.la.size(); ++i) {
    const Task& a = w.la[i];
    const Task& b = w.la[oldest];
    if (a.arrival_time < b.arrival_time || (a.arrival_time == b.arrival_time && a.family() < b.family())) {
      oldest = i;
    }
  }
  int best_robot = -1;
  double best_finish = 0.0;
  for (const auto& r : w.robots) {
    if (r.failed) continue;
    const double finish = plan_assignment(w, r.id, w.la[oldest]).finish;
    if (best_robot < 0 || finish < best_finish) {
      best_robot = r.id;
      best_finish = finish;
    }
  }
  return Decision{static_cast<int>(oldest), best_robot, w.clock};
}

}  // namespace mrta
