// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "mrta/agent.hpp"
#include "mrta/baselines.hpp"
#include "mrta/checkpoint.hpp"
#include "mrta/config.hpp"
#include "mrta/dataset.hpp"
#include "mrta/experiment.hpp"
#include "support.hpp"

using namespace mrta;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Result {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<Task> gaussian_set(int n, std::uint64_t seed) {
  DatasetSpec s;
  s.n_tasks = n;
  s.seed = seed;
  return generate_dataset(s);
}

// ---------------------------------------------------------------------------

Result riccati() {
  const nav::LqrGain g = nav::solve_care(nav::Mat4::Identity(), nav::Mat2::Identity());
  nav::Gain expected = nav::Gain::Zero();
  expected(0, 0) = expected(1, 1) = 1.0;
  expected(0, 2) = expected(1, 3) = std::sqrt(3.0);
  const double gain_err = (g.k - expected).cwiseAbs().maxCoeff();

  std::vector<double> times;
  for (int k = 0; k < 201; ++k) {
    const auto t0 = Clock::now();
    const auto r = nav::solve_care(nav::Mat4::Identity(), nav::Mat2::Identity());
    times.push_back(seconds_since(t0));
    if (r.k != g.k) return {false, "solver is not repeatable"};
  }
  std::sort(times.begin(), times.end());
  const double median_ms = 1e3 * times[times.size() / 2];
  const bool ok = gain_err <= 1e-6 && g.residual <= 1e-8 && median_ms < 1.0;
  return {ok, fmt("gain error %.2e, residual %.2e, median solve %.3f ms", gain_err, g.residual, median_ms)};
}

Result apf_gradient() {
  const WorldConfig cfg;
  const double d_min = cfg.d_min, k = cfg.k_rep, h = 1e-6;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 2.5 * d_min);
  int fleets = 0;
  double worst_rel = 0.0, worst_sum = 0.0;
  while (fleets < 1000) {
    std::vector<Vec2> p(2 + static_cast<int>(rng() % 7));
    for (auto& x : p) x = Vec2(u(rng), u(rng));
    bool ok = true, interacting = false;
    for (std::size_t i = 0; i < p.size(); ++i) {
      for (std::size_t j = i + 1; j < p.size(); ++j) {
        const double d = (p[i] - p[j]).norm();
        ok = ok && d > 0.1 * d_min && std::abs(d - d_min) > 0.02 * d_min;
        interacting = interacting || d < d_min;
      }
    }
    if (!ok || !interacting) continue;
    ++fleets;
    const auto f = mrta::testing::fleet_of(p);
    const auto forces = nav::apf_forces(f, d_min, k);
    Vec2 sum = Vec2::Zero();
    for (std::size_t i = 0; i < p.size(); ++i) {
      sum += forces[i];
      Vec2 fd;
      for (int axis = 0; axis < 2; ++axis) {
        auto plus = p, minus = p;
        plus[i](axis) += h;
        minus[i](axis) -= h;
        fd(axis) = -(mrta::testing::potential_oracle(plus, d_min, k) -
                     mrta::testing::potential_oracle(minus, d_min, k)) / (2 * h);
      }
      const double scale = std::max(forces[i].norm(), fd.norm());
      if (scale > 0.0) worst_rel = std::max(worst_rel, (forces[i] - fd).norm() / scale);
    }
    worst_sum = std::max(worst_sum, sum.norm());
  }
  return {worst_rel <= 1e-5 && worst_sum <= 1e-9,
          fmt("%d fleets, max relative error %.2e, max |sum F| %.2e", fleets, worst_rel, worst_sum)};
}

Result collisions() {
  const auto t0 = Clock::now();
  WorldConfig cfg;
  double min_with = INFINITY, min_without = INFINITY;
  int violations_without = 0, degenerate_without = 0;
  for (int e = 0; e < 100; ++e) {
    const auto tasks = gaussian_set(505, 0xc0111de0 + static_cast<std::uint64_t>(e));
    cfg.seed = static_cast<std::uint64_t>(e);
    cfg.k_rep = WorldConfig{}.k_rep;
    FifoDispatcher fifo;
    min_with = std::min(min_with, run_episode(tasks, fifo, cfg).min_pairwise_distance);
    cfg.k_rep = 0.0;
    try {
      const double d = run_episode(tasks, fifo, cfg).min_pairwise_distance;
      min_without = std::min(min_without, d);
      if (d < 0.5) ++violations_without;
    } catch (const DegenerateGeometryError&) {
      // robots driven onto the same point
      ++violations_without;
      ++degenerate_without;
      min_without = 0.0;
    }
  }
  const double secs = seconds_since(t0);
  return {min_with >= 0.5 && violations_without >= 1 && secs < 300.0,
          fmt("min distance %.3f with repulsion; without: %d/100 episodes below 0.5 (%d coincident), min %.4f; %.1f s",
              min_with, violations_without, degenerate_without, min_without, secs)};
}

Result ppo_gradient() {
  std::mt19937_64 rng(4);
  double worst = 0.0;
  std::size_t checked = 0;
  // Default coefficients and O(1) coefficients, both agents.
  std::vector<PpoConfig> cfgs(2);
  cfgs[1].entropy_coef = 0.1;
  cfgs[1].value_coef = 0.5;
  for (const auto& cfg : cfgs) {
    for (Role role : {Role::kPlanner, Role::kExecutor}) {
      PolicyNet net(role);
      net.init(rng());
      const auto samples = mrta::testing::random_samples(net, 8, 2, 2, rng);
      std::vector<BatchItem> batch;
      std::normal_distribution<double> n01;
      for (const auto& s : samples) batch.push_back(BatchItem{&s, n01(rng), n01(rng)});
      const auto gc = mrta::testing::check_ppo_gradient(net, batch, cfg);
      worst = std::max(worst, gc.max_rel_error);
      checked += gc.checked;
    }
  }
  return {worst <= 1e-4 && checked == 4 * PolicyNet::parameter_count(),
          fmt("%zu parameters checked, max relative error %.2e", checked, worst)};
}

Result bfo_oracle() {
  std::mt19937_64 rng(5);
  int instances = 0, mismatches = 0;
  while (instances < 1000) {
    const WorldState w = mrta::testing::random_world(rng, 3, 3);
    if (!can_decide(w)) continue;
    ++instances;
    const auto [ti, ri] = mrta::testing::bfo_oracle(w);
    const Decision d = bfo_decide(w);
    if (d.task_index != ti || d.robot_id != ri) ++mismatches;
  }
  return {mismatches == 0, fmt("%d instances, %d mismatches", instances, mismatches)};
}

// Recomputes every step reward and the episode totals from the log alone.
int audit_log(const EpisodeLog& log, const WorldConfig& cfg) {
  int bad = 0;
  const auto docks = cfg.effective_docks();
  double trto = 0.0, ttgt = 0.0;
  for (const auto& s : log.steps) {
    const auto& task = s.observation.tasks.at(static_cast<std::size_t>(s.task_index));
    const auto& robot = s.observation.robots.at(static_cast<std::size_t>(s.robot_id));
    std::vector<std::pair<double, double>> starts{{robot[0], robot[1]}};
    for (const auto& d : docks) starts.emplace_back(d.x(), d.y());
    bool matched = false;
    for (const auto& [x, y] : starts) {
      matched = matched || std::hypot(x - task[0], y - task[1]) == s.outcome.trto;
    }
    const double gap = s.outcome.t_exec - task[5];
    const double reward = -s.outcome.trto - cfg.alpha * gap;
    if (!matched || gap != s.outcome.ttgt || reward != s.outcome.reward || gap < 0.0) ++bad;
    trto += s.outcome.trto;
    ttgt += s.outcome.ttgt;
  }
  if (trto != log.sum_trto || ttgt != log.sum_ttgt || log.total_cost != trto + cfg.alpha * ttgt) ++bad;
  return bad;
}

Result reward_accounting() {
  int episodes = 0, steps = 0, bad = 0;
  PolicyNet p(Role::kPlanner), e(Role::kExecutor);
  p.init(1);
  e.init(2);
  for (double alpha : {1.0, 0.5, 0.0}) {
    for (int k = 0; k < 6; ++k) {
      WorldConfig cfg;
      cfg.alpha = alpha;
      cfg.seed = static_cast<std::uint64_t>(k);
      if (k % 2 == 1) {
        cfg.n_robots = 4;
        cfg.la_len = 3;
        cfg.discharge_rate = 0.004;
      }
      const auto tasks = gaussian_set(k % 2 == 1 ? 50 : 505, 0xacc0 + static_cast<std::uint64_t>(k));
      FifoDispatcher fifo;
      BfoDispatcher bfo;
      AgentDispatcher agent(p, e, FeatureScales::from_config(cfg), static_cast<std::uint64_t>(k));
      for (Dispatcher* d : std::initializer_list<Dispatcher*>{&fifo, &bfo, &agent}) {
        const EpisodeLog log = run_episode(tasks, *d, cfg);
        bad += audit_log(log, cfg);
        steps += static_cast<int>(log.steps.size());
        ++episodes;
      }
    }
  }
  return {bad == 0, fmt("%d episodes, %d steps, %d discrepancies", episodes, steps, bad)};
}

Result baseline_ordering() {
  const auto t0 = Clock::now();
  WorldConfig cfg;
  std::string rows;
  int holds = 0;
  for (int k = 0; k < 5; ++k) {
    const auto tasks = gaussian_set(505, 0x7ab1e100 + static_cast<std::uint64_t>(k));
    FifoDispatcher fifo;
    BfoDispatcher bfo;
    const double cf = run_episode(tasks, fifo, cfg).total_cost;
    const double cb = run_episode(tasks, bfo, cfg).total_cost;
    if (cb <= cf) ++holds;
    rows += fmt(" %.2f/%.2f", cb * 1e-3, cf * 1e-3);
  }
  const double secs = seconds_since(t0);
  return {holds == 5 && secs < 600.0, fmt("BFO <= FIFO on %d/5 (BFO/FIFO x1e3:%s); %.1f s", holds, rows.c_str(), secs)};
}

Result learning_signal() {
  const auto t0 = Clock::now();
  RunConfig rc;
  rc.world.n_robots = 4;
  rc.world.la_len = 3;
  rc.world.episode_tasks = 50;
  rc.train.schedule.cycles = 5;
  rc.train.schedule.episodes_per_cycle = 40;

  const int n_seeds = 4;
  std::vector<TrainResult> trained(n_seeds);
#pragma omp parallel for schedule(dynamic, 1)
  for (int s = 0; s < n_seeds; ++s) {
    RunConfig c = rc;
    c.train.seed = static_cast<std::uint64_t>(s + 1);
    trained[static_cast<std::size_t>(s)] = self_play_train(c.world, c.train, make_training_datasets(c));
  }

  int improved = 0;
  std::string curves;
  for (const auto& t : trained) {
    double first = 0.0, last = 0.0;
    const std::size_t n = t.curve.size();
    for (std::size_t i = 0; i < 20; ++i) {
      first += t.curve[i].mean_reward / 20.0;
      last += t.curve[n - 20 + i].mean_reward / 20.0;
    }
    if (last > first) ++improved;
    curves += fmt(" %.2f->%.2f", first, last);
  }

  std::vector<NamedDataset> held_out;
  for (int k = 0; k < 5; ++k) {
    held_out.push_back({"h" + std::to_string(k), gaussian_set(50, 0x4e1d0000 + static_cast<std::uint64_t>(k))});
  }
  const auto fifo_rows = evaluate(held_out, rc.world, EvalOptions{});
  std::vector<double> sampled(5, 0.0), greedy(5, 0.0);
  for (const auto& t : trained) {
    const Checkpoint ck{t.planner, t.executor};
    EvalOptions opts;
    opts.policy = PolicyKind::kMrtAgent;
    opts.checkpoint = &ck;
    opts.seeds = {0, 1, 2, 3, 4};
    const auto rows = evaluate(held_out, rc.world, opts);
    for (std::size_t i = 0; i < rows.size(); ++i) sampled[i / opts.seeds.size()] += rows[i].total_cost;
    opts.mode = ActionMode::kGreedy;
    opts.seeds = {0};
    const auto g = evaluate(held_out, rc.world, opts);
    for (std::size_t i = 0; i < g.size(); ++i) greedy[i] += g[i].total_cost / n_seeds;
  }
  int wins = 0, greedy_wins = 0;
  std::string ratios, greedy_ratios;
  for (std::size_t i = 0; i < 5; ++i) {
    sampled[i] /= n_seeds * 5.0;
    if (sampled[i] <= fifo_rows[i].total_cost) ++wins;
    if (greedy[i] <= fifo_rows[i].total_cost) ++greedy_wins;
    ratios += fmt(" %.2f", sampled[i] / fifo_rows[i].total_cost);
    greedy_ratios += fmt(" %.2f", greedy[i] / fifo_rows[i].total_cost);
  }
  const double secs = seconds_since(t0);
  return {improved >= 3 && wins >= 3 && secs < 1800.0,
          fmt("(a) %d/4 seeds improved [first20->last20 mean reward:%s]; (b) agent <= FIFO on %d/5 held-out "
              "[cost/FIFO:%s]; greedy actions %d/5 [cost/FIFO:%s]; %.1f s",
              improved, curves.c_str(), wins, ratios.c_str(), greedy_wins, greedy_ratios.c_str(), secs)};
}

Result freeze_contract() {
  WorldConfig world;
  world.n_robots = 4;
  world.la_len = 3;
  TrainConfig train;
  train.schedule.cycles = 4;
  train.schedule.episodes_per_cycle = 5;
  train.seed = 9;
  auto datasets = [](int i) { return gaussian_set(30, 0xf4ee0000 + static_cast<std::uint64_t>(i)); };

  PolicyNet p0(Role::kPlanner), e0(Role::kExecutor);
  p0.init(derive_seed(train.seed, 1));
  e0.init(derive_seed(train.seed, 2));
  auto same = [](const PolicyNet& a, const PolicyNet& b) {
    return std::memcmp(a.params().data(), b.params().data(), PolicyNet::parameter_count() * sizeof(double)) == 0;
  };
  // prev_*: parameters after the previous episode; start_*: at the start of the current cycle.
  PolicyNet prev_p = p0, prev_e = e0, start_p = p0, start_e = e0;
  int current_cycle = -1, episodes = 0, frozen_changes = 0, stuck_cycles = 0;
  auto close_cycle = [&] {
    if (current_cycle < 0) return;
    const bool planner_active = train.schedule.active(current_cycle) == Role::kPlanner;
    if (planner_active ? same(start_p, prev_p) : same(start_e, prev_e)) ++stuck_cycles;
  };
  auto cb = [&](int, int cycle, const PolicyNet& p, const PolicyNet& e) {
    if (cycle != current_cycle) {
      close_cycle();
      current_cycle = cycle;
      start_p = prev_p;
      start_e = prev_e;
    }
    const bool planner_active = train.schedule.active(cycle) == Role::kPlanner;
    if (planner_active ? !same(start_e, e) : !same(start_p, p)) ++frozen_changes;
    prev_p = p;
    prev_e = e;
    ++episodes;
  };
  self_play_train(world, train, datasets, p0, e0, cb);
  close_cycle();
  return {episodes == 20 && frozen_changes == 0 && stuck_cycles == 0,
          fmt("%d episodes over %d cycles, frozen-agent changes: %d, cycles with an unchanged active agent: %d",
              episodes, train.schedule.cycles, frozen_changes, stuck_cycles)};
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Result determinism(const std::string& cli, const fs::path& work) {
  if (cli.empty()) return {false, "CLI path not given"};
  const std::string tool = fs::absolute(cli).string();
  const char* script[] = {
      "generate --dist gaussian --n 40 --seed 3 --out data/a.jsonl",
      "generate --dist uniform --n 40 --seed 4 --out data/b.jsonl",
      "train --config run.cfg --out agent.ckpt --curve curve.csv --quiet",
      "evaluate --policy mrtagent --ckpt agent.ckpt --data 'data/*.jsonl' --seeds 1,2 --config run.cfg "
      "--out agent.csv > agent_table.txt",
      "evaluate --policy fifo --data 'data/*.jsonl' --config run.cfg --out fifo.csv > fifo_table.txt",
      "evaluate --policy bfo --data 'data/*.jsonl' --config run.cfg --out bfo.csv > bfo_table.txt",
      "compare --in agent.csv fifo.csv bfo.csv > compare.txt",
      "simulate --policy mrtagent --ckpt agent.ckpt --data data/a.jsonl --config run.cfg --seed 5 "
      "--log episode.jsonl --trajectory traj.txt > simulate.txt",
  };
  const char* config =
      "n_robots = 4\nla_len = 3\nepisode_tasks = 40\ncycles = 2\nepisodes_per_cycle = 3\ntrain_seed = 11\n";
  const fs::path root = fs::absolute(work);
  std::vector<fs::path> runs{root / "run1", root / "run2"};
  for (const auto& dir : runs) {
    fs::remove_all(dir);
    fs::create_directories(dir / "data");
    std::ofstream(dir / "run.cfg") << config;
    for (const char* cmd : script) {
      const std::string line = "cd '" + dir.string() + "' && '" + tool + "' " + cmd + " 2>>stderr.txt";
      if (std::system(line.c_str()) != 0) return {false, std::string("command failed: ") + cmd};
    }
  }
  int files = 0, differ = 0;
  std::string which;
  for (const auto& entry : fs::recursive_directory_iterator(runs[0])) {
    if (!entry.is_regular_file() || entry.path().filename() == "stderr.txt") continue;
    const auto rel = fs::relative(entry.path(), runs[0]);
    ++files;
    if (read_file(entry.path()) != read_file(runs[1] / rel)) {
      ++differ;
      which += " " + rel.string();
    }
  }
  return {files >= 12 && differ == 0,
          fmt("%zu commands run twice, %d output files compared, %d differ%s", std::size(script), files, differ,
              which.c_str())};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::string cli;
  std::string work = (fs::temp_directory_path() / "mrta_acceptance").string();
  std::vector<int> only;
  app.add_option("--cli", cli, "path to the mrta command-line tool");
  app.add_option("--work", work, "scratch directory");
  app.add_option("--only", only, "run only these criteria");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<const char*, std::function<Result()>>> criteria{
      {"Riccati correctness", riccati},
      {"APF gradient fidelity", apf_gradient},
      {"collision property", collisions},
      {"PPO gradient check", ppo_gradient},
      {"BFO oracle equivalence", bfo_oracle},
      {"reward accounting", reward_accounting},
      {"baseline ordering", baseline_ordering},
      {"desk-scale learning signal", learning_signal},
      {"freeze/alternation contract", freeze_contract},
      {"determinism", [&] { return determinism(cli, work); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Result r;
    try {
      r = criteria[i].second();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    if (!r.pass) ++failed;
    std::printf("%-4s %2d %-28s %s\n", r.pass ? "PASS" : "FAIL", id, criteria[i].first, r.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
