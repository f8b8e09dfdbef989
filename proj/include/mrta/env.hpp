#ifndef MRTA_ENV_HPP_
#define MRTA_ENV_HPP_

#include <array>
#include <cstddef>
#include <deque>
#include <functional>
#include <iosfwd>
#include <unordered_map>
#include <vector>

#include "mrta/domain.hpp"
#include "mrta/nav.hpp"

namespace mrta {

// Raw per-decision features, rows in look-ahead order and robot-id order.
struct Observation {
  double clock = 0.0;
  std::vector<std::array<double, kTaskFeatureDim>> tasks;
  std::vector<std::array<double, kRobotFeatureDim>> robots;
  std::vector<bool> masked;  // robots excluded from selection
};

struct Decision {
  int task_index = 0;  // index into the look-ahead queue
  int robot_id = 0;
  double decided_at = 0.0;
};

struct StepOutcome {
  double reward = 0.0;
  double trto = 0.0;
  double ttgt = 0.0;
  double t_exec = 0.0;
};

struct DecisionRecord {
  int index = 0;
  double clock = 0.0;
  int task_id = 0;  // family id of the served task
  int task_index = 0;
  int robot_id = 0;
  Observation observation;
  StepOutcome outcome;
};

struct EpisodeLog {
  std::vector<DecisionRecord> steps;
  double alpha = 1.0;
  double sum_trto = 0.0;
  double sum_ttgt = 0.0;
  double total_cost = 0.0;
  double span = 0.0;  // time of the last delivery
  double min_pairwise_distance = 0.0;
  int stalled_arrivals = 0;
  int charge_visits = 0;

  // Recomputes the totals from the per-decision records.
  void finalize();
};

// Episode log export: one JSON object per line, decisions then a summary.
void write_episode_log(std::ostream& out, const EpisodeLog& log);

struct Dock {
  Vec2 position = Vec2::Zero();
  int occupant = -1;
};

struct WorldState {
  WorldConfig cfg;
  nav::LqrGain gain;

  long long step = 0;
  double clock = 0.0;

  std::vector<Task> tasks;  // originals sorted by (arrival, id)
  std::unordered_map<int, std::size_t> task_slot;
  std::size_t next_arrival = 0;
  std::size_t tasks_done = 0;
  int next_duplicate_id = 0;

  std::deque<int> buffer;  // task ids, FIFO
  std::vector<Task> la;    // look-ahead queue; copies of originals or duplicates
  std::vector<RobotState> robots;
  std::vector<Dock> docks;

  EpisodeLog log;

  Task& task(int id) { return tasks.at(task_slot.at(id)); }
  const Task& task(int id) const { return tasks.at(task_slot.at(id)); }
};

// Validates the dataset (sorted, in-bounds, unique ids) and the config, places
// robots from cfg.seed and solves the navigation gain.
WorldState make_world(std::vector<Task> dataset, const WorldConfig& cfg);

Observation observe(const WorldState& w);

// Moves arrived tasks into the buffer, then fills the look-ahead queue from
// the buffer (replacing placeholder duplicates first). When the buffer is
// empty the longest-waiting entry is duplicated until the queue is full.
void ingest_arrivals(WorldState& w);

// Nominal (v_max, straight-line) end of a robot's current itinerary.
struct ItineraryEnd {
  double time = 0.0;
  Vec2 position = Vec2::Zero();
  double charge = 0.0;
};

ItineraryEnd project_itinerary(const RobotState& robot, const WorldState& w);

// Nominal timeline for appending task to robot's itinerary.
struct AssignmentPlan {
  bool charge_detour = false;
  int dock = -1;
  Vec2 start_position = Vec2::Zero();  // where the travel-to-origin leg begins
  double t_exec = 0.0;                 // when the travel-to-origin leg begins
  double finish = 0.0;                 // delivery time
};

AssignmentPlan plan_assignment(const WorldState& w, int robot_id, const Task& task);

int nearest_dock(const WorldState& w, const Vec2& from, bool available_only);

bool robot_assignable(const WorldState& w, const RobotState& r);
bool can_decide(const WorldState& w);
bool episode_done(const WorldState& w);

StepOutcome apply_decision(WorldState& w, const Decision& d);

// Per-step callback receiving the state after integration and the commands
// that were applied.
using StepObserver =
    std::function<void(const WorldState&, const std::vector<nav::NavCommand>&)>;

// One integration step of cfg.dt for the whole fleet.
void advance(WorldState& w, const StepObserver& observer = {});

class Dispatcher {
 public:
  virtual ~Dispatcher() = default;
  virtual Decision decide(const WorldState& w) = 0;
};

EpisodeLog run_episode(const std::vector<Task>& dataset, Dispatcher& dispatcher,
                       const WorldConfig& cfg, const StepObserver& observer = {});

}  // namespace mrta

#endif  // MRTA_ENV_HPP_
