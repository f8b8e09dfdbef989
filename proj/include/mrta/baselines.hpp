#ifndef MRTA_BASELINES_HPP_
#define MRTA_BASELINES_HPP_

#include <vector>

#include "mrta/env.hpp"

namespace mrta {

// Nominal service estimate for one look-ahead task on one robot.
struct PairEstimate {
  int task_index = 0;
  int robot_id = 0;
  double est_start = 0.0;          // when travel to the origin begins
  double est_exec_duration = 0.0;  // now -> delivery: wait, detour, to origin, to destination
};

PairEstimate estimate_pair(const WorldState& w, int task_index, int robot_id);

// Every (task, robot) pair over the look-ahead queue and unmasked robots,
// task-major then robot id.
std::vector<PairEstimate> enumerate_pairs(const WorldState& w);

// Pair with the smallest estimated duration; ties go to the lowest
// (task_index, robot_id).
Decision bfo_decide(const WorldState& w);

// Oldest task in the queue (arrival, then id), served by the robot that can
// finish it first (ties by robot id).
Decision fifo_decide(const WorldState& w);

class BfoDispatcher final : public Dispatcher {
 public:
  Decision decide(const WorldState& w) override { return bfo_decide(w); }
};

class FifoDispatcher final : public Dispatcher {
 public:
  Decision decide(const WorldState& w) override { return fifo_decide(w); }
};

}  // namespace mrta

#endif  // MRTA_BASELINES_HPP_
