#ifndef MRTA_CONFIG_HPP_
#define MRTA_CONFIG_HPP_

#include <iosfwd>
#include <string>
#include <vector>

#include "mrta/agent.hpp"
#include "mrta/dataset.hpp"
#include "mrta/domain.hpp"

namespace mrta {

// Everything a run needs: world, training schedule and PPO settings, and the
// distribution training episodes are drawn from.
struct RunConfig {
  WorldConfig world;
  TrainConfig train;
  ArrivalDist train_dist = ArrivalDist::kGaussian;
};

// Flat "key = value" text, '#' starts a comment. Keys are the field names of
// WorldConfig and PpoConfig plus cycles, episodes_per_cycle, train_seed,
// dataset_refresh, train_dist and train_only. Lists: q_diag/r_diag as
// "a,b,..", failed_robots as "1,2", dock_positions as "x,y;x,y".
// Unknown keys, repeated keys and unparsable values throw ValidationError.
RunConfig parse_config(std::istream& in);
RunConfig parse_config_string(const std::string& text);
RunConfig load_config(const std::string& path);

// Applies a single key to an existing config.
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);

// Every key with its current value, in parse_config syntax.
void write_config(std::ostream& out, const RunConfig& cfg);

std::vector<std::string> config_keys();

// Training task lists: a fresh dataset per refresh index, seeded from the
// training seed, sized by world.episode_tasks.
DatasetFactory make_training_datasets(const RunConfig& cfg);

}  // namespace mrta

#endif  // MRTA_CONFIG_HPP_
