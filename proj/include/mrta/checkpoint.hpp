#ifndef MRTA_CHECKPOINT_HPP_
#define MRTA_CHECKPOINT_HPP_

#include <string>

#include "mrta/policy_net.hpp"

namespace mrta {

// Binary checkpoint, little-endian:
//
//   "MRTACKPT"  u32 version  u32 net_count
//   per net:    u32 role  u32 layer_count  (u32 in, u32 out) * layer_count
//               u64 param_count  f64 * param_count
//   u64 FNV-1a hash of every preceding byte
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  PolicyNet planner{Role::kPlanner};
  PolicyNet executor{Role::kExecutor};
};

std::string serialize_checkpoint(const PolicyNet& planner, const PolicyNet& executor);
Checkpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const std::string& path, const PolicyNet& planner, const PolicyNet& executor);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace mrta

#endif  // MRTA_CHECKPOINT_HPP_
