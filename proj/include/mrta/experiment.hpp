#ifndef MRTA_EXPERIMENT_HPP_
#define MRTA_EXPERIMENT_HPP_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mrta/agent.hpp"
#include "mrta/checkpoint.hpp"
#include "mrta/env.hpp"

namespace mrta {

enum class PolicyKind : std::uint8_t { kMrtAgent, kBfo, kFifo };

const char* to_string(PolicyKind p);
PolicyKind parse_policy(const std::string& s);
bool is_stochastic(PolicyKind p, ActionMode mode);

struct NamedDataset {
  std::string name;
  std::vector<Task> tasks;
};

// One evaluated episode. seed is empty for deterministic runs.
struct EvalRow {
  std::string policy;
  std::string dataset;
  std::optional<std::uint64_t> seed;
  double total_cost = 0.0;
  double sum_trto = 0.0;
  double sum_ttgt = 0.0;
  double span = 0.0;
  int decisions = 0;
  double min_pairwise_distance = 0.0;
  double runtime_s = 0.0;  // wall clock, not written to CSV
};

struct EvalOptions {
  PolicyKind policy = PolicyKind::kFifo;
  const Checkpoint* checkpoint = nullptr;  // required for kMrtAgent
  ActionMode mode = ActionMode::kSample;
  std::vector<std::uint64_t> seeds{0};
};

// Runs every (dataset, seed) job, in parallel. Deterministic policies run once
// per dataset. Rows come back in (dataset, seed) order.
std::vector<EvalRow> evaluate(const std::vector<NamedDataset>& datasets, const WorldConfig& cfg,
                              const EvalOptions& opts);

// Episode seed for an evaluation seed: the world seed is left as configured
// so all policies see the same robot placement.
std::uint64_t eval_episode_seed(std::uint64_t eval_seed);

// policy,dataset,seed,total_cost,sum_trto,sum_ttgt,span,decisions,min_distance
void write_eval_csv(std::ostream& out, const std::vector<EvalRow>& rows);
std::vector<EvalRow> read_eval_csv(std::istream& in);

struct Stat {
  int n = 0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 when n == 1
};

Stat summarize(const std::vector<double>& xs);

struct CellSummary {
  Stat cost;
  Stat trto;
  Stat ttgt;
  bool stochastic = false;  // more than one seed
};

// policy -> dataset -> summary
using ExperimentReport = std::map<std::string, std::map<std::string, CellSummary>>;

ExperimentReport aggregate(const std::vector<EvalRow>& rows);

// Table with costs scaled by 1e-3; "mean ± std" only for multi-seed cells.
void write_report_table(std::ostream& out, const ExperimentReport& report);

struct DatasetOrdering {
  std::string dataset;
  // Policies from cheapest to most expensive with their mean costs. Equal
  // means share a rank.
  std::vector<std::pair<std::string, double>> ranked;
  bool tie_for_best = false;
};

struct Comparison {
  std::vector<DatasetOrdering> per_dataset;
  std::map<std::string, int> wins;  // strict best on a dataset
  int ties = 0;                     // datasets where the best cost is shared
  std::vector<std::string> anomalies;
};

// Requires >= 2 policies covering the same dataset set.
Comparison compare(const ExperimentReport& report);
void write_comparison(std::ostream& out, const Comparison& c);

}  // namespace mrta

#endif  // MRTA_EXPERIMENT_HPP_
