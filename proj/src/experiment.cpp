#include "mrta/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <iomanip>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "mrta/baselines.hpp"

namespace mrta {

const char* to_string(PolicyKind p) {
  switch (p) {
    case PolicyKind::kMrtAgent:
      return "mrtagent";
    case PolicyKind::kBfo:
      return "bfo";
    case PolicyKind::kFifo:
      return "fifo";
  }
  return "?";
}

PolicyKind parse_policy(const std::string& s) {
  if (s == "mrtagent") return PolicyKind::kMrtAgent;
  if (s == "bfo") return PolicyKind::kBfo;
  if (s == "fifo") return PolicyKind::kFifo;
  throw ValidationError("unknown policy '" + s + "' (mrtagent|bfo|fifo)");
}

bool is_stochastic(PolicyKind p, ActionMode mode) {
  return p == PolicyKind::kMrtAgent && mode == ActionMode::kSample;
}

std::uint64_t eval_episode_seed(std::uint64_t eval_seed) { return derive_seed(eval_seed, 0xe7a1ULL); }

std::vector<EvalRow> evaluate(const std::vector<NamedDataset>& datasets, const WorldConfig& cfg,
                              const EvalOptions& opts) {
  cfg.validate();
  if (opts.policy == PolicyKind::kMrtAgent && opts.checkpoint == nullptr) {
    throw ValidationError("evaluate: mrtagent needs a checkpoint");
  }
  const bool stochastic = is_stochastic(opts.policy, opts.mode);
  if (stochastic && opts.seeds.empty()) throw ValidationError("evaluate: no evaluation seeds");
  std::set<std::string> names;
  for (const auto& d : datasets) {
    if (d.name.find_first_of(",\n") != std::string::npos) {
      throw ValidationError("evaluate: dataset name '" + d.name + "' contains a comma or newline");
    }
    if (!names.insert(d.name).second) throw ValidationError("evaluate: duplicate dataset name " + d.name);
  }

  struct Job {
    std::size_t dataset;
    std::optional<std::uint64_t> seed;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < datasets.size(); ++i) {
    if (stochastic) {
      for (const auto s : opts.seeds) jobs.push_back(Job{i, s});
    } else {
      jobs.push_back(Job{i, std::nullopt});
    }
  }

  const FeatureScales scales = FeatureScales::from_config(cfg);
  std::vector<EvalRow> rows(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  const auto n_jobs = static_cast<long long>(jobs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long long k = 0; k < n_jobs; ++k) {
    const Job& job = jobs[static_cast<std::size_t>(k)];
    try {
      const auto t0 = std::chrono::steady_clock::now();
      EpisodeLog log;
      const auto& tasks = datasets[job.dataset].tasks;
      switch (opts.policy) {
        case PolicyKind::kBfo: {
          BfoDispatcher d;
          log = run_episode(tasks, d, cfg);
          break;
        }
        case PolicyKind::kFifo: {
          FifoDispatcher d;
          log = run_episode(tasks, d, cfg);
          break;
        }
        case PolicyKind::kMrtAgent: {
          AgentDispatcher d(opts.checkpoint->planner, opts.checkpoint->executor, scales,
                            eval_episode_seed(job.seed.value_or(0)), opts.mode);
          log = run_episode(tasks, d, cfg);
          break;
        }
      }
      const auto t1 = std::chrono::steady_clock::now();
      EvalRow& row = rows[static_cast<std::size_t>(k)];
      row.policy = to_string(opts.policy);
      row.dataset = datasets[job.dataset].name;
      row.seed = job.seed;
      row.total_cost = log.total_cost;
      row.sum_trto = log.sum_trto;
      row.sum_ttgt = log.sum_ttgt;
      row.span = log.span;
      row.decisions = static_cast<int>(log.steps.size());
      row.min_pairwise_distance = log.min_pairwise_distance;
      row.runtime_s = std::chrono::duration<double>(t1 - t0).count();
    } catch (...) {
      errors[static_cast<std::size_t>(k)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return rows;
}

namespace {

constexpr const char* kCsvHeader = "policy,dataset,seed,total_cost,sum_trto,sum_ttgt,span,decisions,min_distance";

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, int line_no) {
  try {
    std::size_t used = 0;
    const double x = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return x;
  } catch (const std::exception&) {
    throw ValidationError("csv line " + std::to_string(line_no) + ": bad number '" + s + "'");
  }
}

}  // namespace

void write_eval_csv(std::ostream& out, const std::vector<EvalRow>& rows) {
  std::ostringstream o;
  o << std::setprecision(17);
  o << kCsvHeader << '\n';
  for (const auto& r : rows) {
    o << r.policy << ',' << r.dataset << ',';
    if (r.seed) o << *r.seed;
    o << ',' << r.total_cost << ',' << r.sum_trto << ',' << r.sum_ttgt << ',' << r.span << ',' << r.decisions
      << ',' << r.min_pairwise_distance << '\n';
  }
  out << o.str();
}

std::vector<EvalRow> read_eval_csv(std::istream& in) {
  std::vector<EvalRow> rows;
  std::string line;
  int line_no = 0;
  if (!std::getline(in, line)) throw ValidationError("csv: empty input");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) throw ValidationError("csv: unexpected header '" + line + "'");
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 9) throw ValidationError("csv line " + std::to_string(line_no) + ": expected 9 fields");
    EvalRow r;
    r.policy = f[0];
    r.dataset = f[1];
    if (!f[2].empty()) {
      try {
        std::size_t used = 0;
        r.seed = std::stoull(f[2], &used);
        if (used != f[2].size()) throw std::invalid_argument(f[2]);
      } catch (const std::exception&) {
        throw ValidationError("csv line " + std::to_string(line_no) + ": bad seed '" + f[2] + "'");
      }
    }
    r.total_cost = parse_double(f[3], line_no);
    r.sum_trto = parse_double(f[4], line_no);
    r.sum_ttgt = parse_double(f[5], line_no);
    r.span = parse_double(f[6], line_no);
    r.decisions = static_cast<int>(parse_double(f[7], line_no));
    r.min_pairwise_distance = parse_double(f[8], line_no);
    rows.push_back(std::move(r));
  }
  return rows;
}

Stat summarize(const std::vector<double>& xs) {
  Stat s;
  s.n = static_cast<int>(xs.size());
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

ExperimentReport aggregate(const std::vector<EvalRow>& rows) {
  struct Acc {
    std::vector<double> cost, trto, ttgt;
    bool seeded = false;
  };
  std::map<std::string, std::map<std::string, Acc>> acc;
  for (const auto& r : rows) {
    Acc& a = acc[r.policy][r.dataset];
    a.cost.push_back(r.total_cost);
    a.trto.push_back(r.sum_trto);
    a.ttgt.push_back(r.sum_ttgt);
    a.seeded = a.seeded || r.seed.has_value();
  }
  ExperimentReport report;
  for (const auto& [policy, by_ds] : acc) {
    for (const auto& [ds, a] : by_ds) {
      if (!a.seeded && a.cost.size() > 1) {
        throw ValidationError("aggregate: repeated unseeded rows for " + policy + " on " + ds);
      }
      CellSummary c;
      c.cost = summarize(a.cost);
      c.trto = summarize(a.trto);
      c.ttgt = summarize(a.ttgt);
      c.stochastic = a.seeded;
      report[policy][ds] = c;
    }
  }
  return report;
}

namespace {

std::string cell_text(const Stat& s, bool stochastic) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(2) << s.mean * 1e-3;
  if (stochastic) o << " ± " << s.stddev * 1e-3;
  return o.str();
}

void write_block(std::ostream& out, const ExperimentReport& report, const char* title,
                 Stat CellSummary::*member) {
  std::set<std::string> datasets;
  for (const auto& [p, by_ds] : report) {
    for (const auto& kv : by_ds) datasets.insert(kv.first);
  }
  std::size_t w0 = 7;
  for (const auto& d : datasets) w0 = std::max(w0, d.size());
  out << title << " (x10^3)\n";
  out << std::left << std::setw(static_cast<int>(w0 + 2)) << "dataset";
  for (const auto& kv : report) out << std::setw(18) << kv.first;
  out << '\n';
  for (const auto& d : datasets) {
    out << std::setw(static_cast<int>(w0 + 2)) << d;
    for (const auto& [p, by_ds] : report) {
      const auto it = by_ds.find(d);
      // The +1 keeps the two-byte plus-minus sign from eating the padding.
      const std::string text = it == by_ds.end() ? "-" : cell_text(it->second.*member, it->second.stochastic);
      const bool pm = text.find("±") != std::string::npos;
      out << std::setw(pm ? 19 : 18) << text;
    }
    out << '\n';
  }
  out << std::right;
}

}  // namespace

void write_report_table(std::ostream& out, const ExperimentReport& report) {
  write_block(out, report, "total cost", &CellSummary::cost);
  out << '\n';
  write_block(out, report, "sum trto", &CellSummary::trto);
  out << '\n';
  write_block(out, report, "sum ttgt", &CellSummary::ttgt);
}

Comparison compare(const ExperimentReport& report) {
  if (report.size() < 2) throw ValidationError("compare: need at least two policies");
  std::set<std::string> reference;
  for (const auto& kv : report.begin()->second) reference.insert(kv.first);
  for (const auto& [policy, by_ds] : report) {
    std::set<std::string> ds;
    for (const auto& kv : by_ds) ds.insert(kv.first);
    if (ds != reference) {
      throw ValidationError("compare: policy '" + policy + "' was evaluated on a different dataset set than '" +
                            report.begin()->first + "'");
    }
  }
  Comparison c;
  for (const auto& kv : report) c.wins[kv.first] = 0;
  for (const auto& ds : reference) {
    DatasetOrdering o;
    o.dataset = ds;
    for (const auto& [policy, by_ds] : report) o.ranked.emplace_back(policy, by_ds.at(ds).cost.mean);
    std::stable_sort(o.ranked.begin(), o.ranked.end(),
                     [](const auto& a, const auto& b) { return a.second < b.second; });
    o.tie_for_best = o.ranked[0].second == o.ranked[1].second;
    if (o.tie_for_best) {
      ++c.ties;
    } else {
      ++c.wins[o.ranked[0].first];
    }
    const auto bfo = report.find("bfo");
    const auto fifo = report.find("fifo");
    if (bfo != report.end() && fifo != report.end() &&
        bfo->second.at(ds).cost.mean > fifo->second.at(ds).cost.mean) {
      std::ostringstream msg;
      msg << std::setprecision(10) << "bfo > fifo on " << ds << " (" << bfo->second.at(ds).cost.mean << " vs "
          << fifo->second.at(ds).cost.mean << ")";
      c.anomalies.push_back(msg.str());
    }
    c.per_dataset.push_back(std::move(o));
  }
  return c;
}

void write_comparison(std::ostream& out, const Comparison& c) {
  for (const auto& o : c.per_dataset) {
    out << o.dataset << ": ";
    for (std::size_t i = 0; i < o.ranked.size(); ++i) {
      if (i > 0) out << (o.ranked[i].second == o.ranked[i - 1].second ? " = " : " < ");
      out << o.ranked[i].first << " (" << std::fixed << std::setprecision(2) << o.ranked[i].second * 1e-3 << ")";
    }
    out << std::defaultfloat << '\n';
  }
  out << "wins:";
  for (const auto& [p, n] : c.wins) out << ' ' << p << '=' << n;
  out << " ties=" << c.ties << '\n';
  if (c.anomalies.empty()) {
    out << "anomalies: none\n";
  } else {
    for (const auto& a : c.anomalies) out << "anomaly: " << a << '\n';
  }
}

}  // namespace mrta
