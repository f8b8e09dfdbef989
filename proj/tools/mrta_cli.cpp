// mrta: dataset generation, training, evaluation and comparison.

#include <CLI11.hpp>
#include <glob.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mrta/baselines.hpp"
#include "mrta/checkpoint.hpp"
#include "mrta/config.hpp"
#include "mrta/dataset.hpp"
#include "mrta/experiment.hpp"

namespace {

using namespace mrta;

std::vector<std::string> expand_glob(const std::string& pattern) {
  glob_t g{};
  const int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
  std::vector<std::string> out;
  if (rc == 0) {
    for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
  }
  globfree(&g);
  if (rc == GLOB_NOMATCH || out.empty()) throw Error("no files match '" + pattern + "'");
  if (rc != 0) throw Error("glob failed for '" + pattern + "'");
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& s) {
  std::vector<std::uint64_t> seeds;
  std::stringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    if (tok.empty()) continue;
    try {
      std::size_t used = 0;
      seeds.push_back(std::stoull(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ValidationError("bad seed '" + tok + "'");
    }
  }
  if (seeds.empty()) throw ValidationError("no seeds given");
  return seeds;
}

RunConfig config_or_default(const std::string& path) { return path.empty() ? RunConfig{} : load_config(path); }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << text;
  if (!out) throw Error("write failed for " + path);
}

std::unique_ptr<Dispatcher> make_dispatcher(PolicyKind p, const Checkpoint* ck, const WorldConfig& cfg,
                                            std::uint64_t seed, ActionMode mode) {
  switch (p) {
    case PolicyKind::kBfo:
      return std::make_unique<BfoDispatcher>();
    case PolicyKind::kFifo:
      return std::make_unique<FifoDispatcher>();
    case PolicyKind::kMrtAgent:
      if (ck == nullptr) throw ValidationError("--ckpt is required for mrtagent");
      return std::make_unique<AgentDispatcher>(ck->planner, ck->executor, FeatureScales::from_config(cfg),
                                               eval_episode_seed(seed), mode);
  }
  throw ValidationError("unknown policy");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-robot task allocation: simulator, bi-level PPO dispatcher and baselines"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "write a synthetic task dataset (JSON lines)");
  DatasetSpec spec;
  std::string dist = "gaussian";
  std::string gen_out;
  gen->add_option("--dist", dist, "arrival distribution")->check(CLI::IsMember({"gaussian", "uniform"}));
  gen->add_option("--n", spec.n_tasks, "number of tasks")->check(CLI::NonNegativeNumber);
  gen->add_option("--seed", spec.seed, "generator seed");
  gen->add_option("--mean", spec.mean, "gaussian mean");
  gen->add_option("--std", spec.stddev, "gaussian standard deviation");
  gen->add_option("--low", spec.low, "uniform lower bound");
  gen->add_option("--high", spec.high, "uniform upper bound");
  gen->add_option("--width", spec.width, "workspace width");
  gen->add_option("--height", spec.height, "workspace height");
  gen->add_option("--out", gen_out, "output file")->required();

  // train
  auto* train = app.add_subcommand("train", "self-play PPO training");
  std::string train_cfg, train_out, train_curve, train_init;
  train->add_option("--config", train_cfg, "config file")->required()->check(CLI::ExistingFile);
  train->add_option("--out", train_out, "checkpoint to write")->required();
  train->add_option("--curve", train_curve, "training curve CSV");
  train->add_option("--init", train_init, "start from this checkpoint")->check(CLI::ExistingFile);
  bool quiet = false;
  train->add_flag("--quiet", quiet, "no per-episode progress on stderr");

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "run a policy on datasets");
  std::string policy = "fifo", eval_ckpt, eval_glob, eval_seeds = "0", eval_out, eval_cfg;
  bool greedy = false;
  eval->add_option("--policy", policy, "policy")->check(CLI::IsMember({"mrtagent", "bfo", "fifo"}));
  eval->add_option("--ckpt", eval_ckpt, "checkpoint (mrtagent)");
  eval->add_option("--data", eval_glob, "dataset glob")->required();
  eval->add_option("--seeds", eval_seeds, "comma-separated evaluation seeds");
  eval->add_option("--out", eval_out, "results CSV")->required();
  eval->add_option("--config", eval_cfg, "config file")->check(CLI::ExistingFile);
  eval->add_flag("--greedy", greedy, "argmax actions instead of sampling");

  // compare
  auto* cmp = app.add_subcommand("compare", "per-dataset ordering of evaluated policies");
  std::vector<std::string> cmp_in;
  cmp->add_option("--in", cmp_in, "result CSVs")->required()->check(CLI::ExistingFile);

  // simulate
  auto* sim = app.add_subcommand("simulate", "one episode with a full decision log");
  std::string sim_policy = "fifo", sim_ckpt, sim_data, sim_cfg, sim_log, sim_traj;
  std::uint64_t sim_seed = 0;
  bool sim_greedy = false;
  sim->add_option("--policy", sim_policy, "policy")->check(CLI::IsMember({"mrtagent", "bfo", "fifo"}));
  sim->add_option("--ckpt", sim_ckpt, "checkpoint (mrtagent)");
  sim->add_option("--data", sim_data, "dataset file")->required()->check(CLI::ExistingFile);
  sim->add_option("--config", sim_cfg, "config file")->check(CLI::ExistingFile);
  sim->add_option("--seed", sim_seed, "policy sampling seed");
  sim->add_flag("--greedy", sim_greedy, "argmax actions instead of sampling");
  sim->add_option("--log", sim_log, "episode log (JSON lines)")->required();
  sim->add_option("--trajectory", sim_traj, "per-step robot states");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      spec.dist = parse_arrival_dist(dist);
      const auto tasks = generate_dataset(spec);
      write_dataset_file(gen_out, tasks);
      std::cerr << "wrote " << tasks.size() << " tasks to " << gen_out << '\n';
    } else if (*train) {
      const RunConfig cfg = load_config(train_cfg);
      const auto datasets = make_training_datasets(cfg);
      EpisodeCallback progress;
      if (!quiet) {
        progress = [](int ep, int cycle, const PolicyNet&, const PolicyNet&) {
          std::cerr << "\repisode " << ep + 1 << " (cycle " << cycle << ")" << std::flush;
        };
      }
      TrainResult result;
      if (train_init.empty()) {
        result = self_play_train(cfg.world, cfg.train, datasets, progress);
      } else {
        Checkpoint init = load_checkpoint(train_init);
        result = self_play_train(cfg.world, cfg.train, datasets, std::move(init.planner), std::move(init.executor),
                                 progress);
      }
      if (!quiet) std::cerr << '\n';
      save_checkpoint(train_out, result.planner, result.executor);
      if (!train_curve.empty()) {
        std::ostringstream o;
        write_curve_csv(o, result.curve);
        write_text(train_curve, o.str());
      }
    } else if (*eval) {
      const RunConfig cfg = config_or_default(eval_cfg);
      std::vector<NamedDataset> datasets;
      for (const auto& path : expand_glob(eval_glob)) {
        datasets.push_back(NamedDataset{std::filesystem::path(path).filename().string(), read_dataset_file(path)});
      }
      std::optional<Checkpoint> ck;
      const PolicyKind kind = parse_policy(policy);
      if (kind == PolicyKind::kMrtAgent) {
        if (eval_ckpt.empty()) throw ValidationError("--ckpt is required for mrtagent");
        ck = load_checkpoint(eval_ckpt);
      }
      EvalOptions opts;
      opts.policy = kind;
      opts.checkpoint = ck ? &*ck : nullptr;
      opts.mode = greedy ? ActionMode::kGreedy : ActionMode::kSample;
      opts.seeds = parse_seeds(eval_seeds);
      const auto rows = evaluate(datasets, cfg.world, opts);
      std::ostringstream o;
      write_eval_csv(o, rows);
      write_text(eval_out, o.str());
      write_report_table(std::cout, aggregate(rows));
      double runtime = 0.0;
      for (const auto& r : rows) runtime += r.runtime_s;
      std::cerr << rows.size() << " episodes, " << runtime << " s episode time\n";
    } else if (*cmp) {
      std::vector<EvalRow> rows;
      for (const auto& path : cmp_in) {
        std::ifstream in(path);
        if (!in) throw Error("cannot open " + path);
        auto part = read_eval_csv(in);
        rows.insert(rows.end(), part.begin(), part.end());
      }
      const auto report = aggregate(rows);
      write_report_table(std::cout, report);
      std::cout << '\n';
      write_comparison(std::cout, compare(report));
    } else if (*sim) {
      const RunConfig cfg = config_or_default(sim_cfg);
      const auto tasks = read_dataset_file(sim_data);
      std::optional<Checkpoint> ck;
      const PolicyKind kind = parse_policy(sim_policy);
      if (kind == PolicyKind::kMrtAgent && !sim_ckpt.empty()) ck = load_checkpoint(sim_ckpt);
      auto dispatcher = make_dispatcher(kind, ck ? &*ck : nullptr, cfg.world, sim_seed,
                                        sim_greedy ? ActionMode::kGreedy : ActionMode::kSample);
      std::ofstream traj;
      StepObserver observer;
      if (!sim_traj.empty()) {
        traj.open(sim_traj, std::ios::trunc);
        if (!traj) throw Error("cannot open " + sim_traj);
        traj << "t id x y vx vy ux uy\n";
        observer = [&traj](const WorldState& w, const std::vector<nav::NavCommand>& cmds) {
          for (std::size_t i = 0; i < w.robots.size(); ++i) {
            const auto& r = w.robots[i];
            nav::write_trajectory_record(traj, w.clock, nav::RobotKinematics{r.id, r.position, r.velocity}, cmds[i]);
          }
        };
      }
      const EpisodeLog log = run_episode(tasks, *dispatcher, cfg.world, observer);
      std::ostringstream o;
      write_episode_log(o, log);
      write_text(sim_log, o.str());
      std::cout << "total_cost " << log.total_cost << " sum_trto " << log.sum_trto << " sum_ttgt " << log.sum_ttgt
                << " decisions " << log.steps.size() << " min_distance " << log.min_pairwise_distance << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
