#include "mrta/domain.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace mrta {

const char* to_string(TaskStatus s) {
  switch (s) {
    case TaskStatus::kPending: return "pending";
    case TaskStatus::kInLookahead: return "in-la";
    case TaskStatus::kAssigned: return "assigned";
    case TaskStatus::kExecuting: return "executing";
    case TaskStatus::kDone: return "done";
  }
  return "?";
}

const char* to_string(RobotPhase p) {
  switch (p) {
    case RobotPhase::kIdle: return "idle";
    case RobotPhase::kToOrigin: return "to-origin";
    case RobotPhase::kToDestination: return "to-destination";
    case RobotPhase::kToDock: return "to-dock";
    case RobotPhase::kCharging: return "charging";
  }
  return "?";
}

namespace {

bool finite(const Vec2& p) { return std::isfinite(p.x()) && std::isfinite(p.y()); }

}  // namespace

Task make_task(int id, Vec2 origin, Vec2 destination, double arrival_time) {
  if (!finite(origin) || !finite(destination) || !std::isfinite(arrival_time)) {
    throw ValidationError("task " + std::to_string(id) + ": non-finite field");
  }
  if (arrival_time < 0.0) {
    throw ValidationError("task " + std::to_string(id) + ": negative arrival time");
  }
  Task t;
  t.id = id;
  t.origin = origin;
  t.destination = destination;
  t.arrival_time = arrival_time;
  t.stamp_time = arrival_time;
  return t;
}

bool in_rectangle(const Vec2& p, double width, double height) {
  return p.x() >= 0.0 && p.x() <= width && p.y() >= 0.0 && p.y() <= height;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double distance(const Vec2& a, const Vec2& b) {
  if (!finite(a) || !finite(b)) throw ValidationError("distance: non-finite coordinate");
  return std::hypot(a.x() - b.x(), a.y() - b.y());
}

TaskFeature task_feature(const Task& t) {
  return TaskFeature{t.origin, t.destination, distance(t.origin, t.destination),
                     t.stamp_time};
}

RobotFeature robot_feature(const RobotState& rs, double clock, double r_mask) {
  // Position is where the robot will be once its current commitments end.
  const Vec2 at = rs.legs.empty() ? rs.position : rs.legs.back().target;
  const double remaining = rs.failed ? r_mask : std::max(0.0, rs.free_at - clock);
  return RobotFeature{at, remaining, rs.charge};
}

std::vector<Vec2> WorldConfig::effective_docks() const {
  if (!dock_positions.empty()) return dock_positions;
  constexpr double kInset = 2.0;
  return {Vec2(kInset, kInset), Vec2(width - kInset, kInset),
          Vec2(kInset, height - kInset), Vec2(width - kInset, height - kInset)};
}

double WorldConfig::diagonal() const { return std::hypot(width, height); }

void WorldConfig::validate() const {
  auto fail = [](const std::string& what) { throw ValidationError("config: " + what); };
  if (!(width > 0.0) || !(height > 0.0)) fail("width and height must be positive");
  if (n_robots < 1) fail("n_robots must be >= 1");
  if (la_len < 1) fail("la_len must be >= 1");
  if (episode_tasks < 1) fail("episode_tasks must be >= 1");
  if (!(dt > 0.0)) fail("dt must be positive");
  if (!(v_max > 0.0) || !(u_max > 0.0)) fail("v_max and u_max must be positive");
  if (charge_threshold < 0.0 || charge_threshold > 1.0) fail("charge_threshold outside [0,1]");
  if (discharge_rate < 0.0) fail("discharge_rate must be >= 0");
  if (charge_rate == 0.0 && discharge_rate > 0.0) fail("charge_rate must be positive");
  if (initial_charge_min < 0.0 || initial_charge_max > 1.0 ||
      initial_charge_min > initial_charge_max) {
    fail("initial charge range must satisfy 0 <= min <= max <= 1");
  }
  if (alpha < 0.0) fail("alpha must be >= 0");
  if (!(d_min > 0.0)) fail("d_min must be positive");
  if (k_rep < 0.0) fail("k_rep must be >= 0");
  if (!(apf_force_cap > 0.0)) fail("apf_force_cap must be positive");
  for (double q : q_diag) {
    if (q < 0.0) fail("q_diag entries must be >= 0");
  }
  for (double r : r_diag) {
    if (!(r > 0.0)) fail("r_diag entries must be positive");
  }
  if (!(arrival_radius > 0.0)) fail("arrival_radius must be positive");
  if (!(horizon > 0.0)) fail("horizon must be positive");
  if (!(r_mask > 0.0)) fail("r_mask must be positive");
  const auto docks = effective_docks();
  if (docks.empty()) fail("at least one dock is required");
  for (const auto& d : docks) {
    if (!in_rectangle(d, width, height)) fail("dock outside the warehouse");
  }
  std::set<int> seen;
  for (int id : failed_robots) {
    if (id < 0 || id >= n_robots) fail("failed robot id out of range");
    if (!seen.insert(id).second) fail("duplicate failed robot id");
  }
  if (static_cast<int>(seen.size()) >= n_robots) fail("every robot is marked failed");
}

}  // namespace mrta
