#ifndef MRTA_DOMAIN_HPP_
#define MRTA_DOMAIN_HPP_

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mrta {

using Vec2 = Eigen::Vector2d;

// Error hierarchy. Every failure the library reports derives from Error.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ValidationError : Error {
  using Error::Error;
};
struct SolverError : Error {
  using Error::Error;
};
struct DegenerateGeometryError : Error {
  using Error::Error;
};
struct LivelockError : Error {
  using Error::Error;
};
struct CheckpointError : Error {
  using Error::Error;
};
struct NumericalError : Error {
  using Error::Error;
};

enum class TaskStatus : std::uint8_t {
  kPending = 0,   // arrived, waiting in the buffer
  kInLookahead,   // visible in the look-ahead queue
  kAssigned,      // on a robot itinerary, robot not yet travelling for it
  kExecuting,     // robot travelling to origin or destination
  kDone,
};

const char* to_string(TaskStatus s);

// A pickup-and-delivery job.
//
// `arrival_time` is when the job appears in the system. `stamp_time` is when
// it entered the look-ahead queue; it defaults to the arrival time and is the
// timestamp exposed to the agents and used for the waiting-time penalty.
struct Task {
  int id = 0;
  Vec2 origin = Vec2::Zero();
  Vec2 destination = Vec2::Zero();
  double arrival_time = 0.0;
  double stamp_time = 0.0;
  TaskStatus status = TaskStatus::kPending;
  bool is_duplicate = false;
  int source_id = -1;

  // Identity of the family a copy belongs to.
  int family() const { return is_duplicate ? source_id : id; }
};

Task make_task(int id, Vec2 origin, Vec2 destination, double arrival_time);

inline constexpr int kTaskFeatureDim = 6;
inline constexpr int kRobotFeatureDim = 4;

struct TaskFeature {
  Vec2 origin;
  Vec2 destination;
  double length;  // |destination - origin|
  double stamp;

  std::array<double, kTaskFeatureDim> as_array() const {
    return {origin.x(), origin.y(), destination.x(), destination.y(), length,
            stamp};
  }
};

struct RobotFeature {
  Vec2 position;
  double remaining;  // time until free, or the failure sentinel
  double charge;

  std::array<double, kRobotFeatureDim> as_array() const {
    return {position.x(), position.y(), remaining, charge};
  }
};

enum class RobotPhase : std::uint8_t {
  kIdle = 0,
  kToOrigin,
  kToDestination,
  kToDock,
  kCharging,
};

const char* to_string(RobotPhase p);

enum class LegKind : std::uint8_t { kToOrigin, kToDestination, kToDock, kCharge };

// One entry of a robot itinerary. Dock legs carry dock = -1 until a dock is
// reserved at the moment the leg becomes active.
struct Leg {
  LegKind kind = LegKind::kToOrigin;
  Vec2 target = Vec2::Zero();
  int task_id = -1;
  int dock = -1;
};

struct RobotState {
  int id = 0;
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
  double charge = 1.0;
  double free_at = 0.0;
  std::optional<int> assignment;
  RobotPhase phase = RobotPhase::kIdle;
  bool failed = false;

  std::vector<Leg> legs;  // front() is the active leg

  // Stall tracking for the active leg.
  double best_distance = 0.0;
  double best_distance_at = 0.0;
};

struct WorldConfig {
  double width = 64.0;
  double height = 64.0;
  int n_robots = 10;
  int la_len = 5;
  int episode_tasks = 505;

  double v_max = 2.0;
  double u_max = 4.0;
  double dt = 0.05;

  double charge_threshold = 0.30;
  double discharge_rate = 0.0005;
  // Negative means "16x the discharge rate".
  double charge_rate = -1.0;
  double initial_charge_min = 0.5;
  double initial_charge_max = 1.0;
  std::vector<Vec2> dock_positions;  // empty means the four inset corners

  double alpha = 1.0;

  double d_min = 2.0;
  double k_rep = 2000.0;
  double apf_force_cap = 1.0e3;
  std::array<double, 4> q_diag{10.0, 10.0, 1.0, 1.0};
  std::array<double, 2> r_diag{1.0, 1.0};

  double arrival_radius = 0.3;
  double arrival_speed = 0.1;
  double stall_window = 5.0;
  double horizon = 1.0e5;
  double r_mask = 1.0e9;
  std::vector<int> failed_robots;

  std::uint64_t seed = 0;

  double effective_charge_rate() const {
    return charge_rate < 0.0 ? 16.0 * discharge_rate : charge_rate;
  }
  std::vector<Vec2> effective_docks() const;
  double diagonal() const;

  // Throws ValidationError on inconsistent fields.
  void validate() const;
};

bool in_rectangle(const Vec2& p, double width, double height);

// Deterministic seed for an independent stream (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

double distance(const Vec2& a, const Vec2& b);

TaskFeature task_feature(const Task& t);

RobotFeature robot_feature(const RobotState& rs, double clock, double r_mask);

}  // namespace mrta

#endif  // MRTA_DOMAIN_HPP_
