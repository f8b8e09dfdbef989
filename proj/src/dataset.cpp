#include "mrta/dataset.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>

namespace mrta {

const char* to_string(ArrivalDist d) { return d == ArrivalDist::kGaussian ? "gaussian" : "uniform"; }

ArrivalDist parse_arrival_dist(const std::string& s) {
  if (s == "gaussian") return ArrivalDist::kGaussian;
  if (s == "uniform") return ArrivalDist::kUniform;
  throw ValidationError("unknown arrival distribution '" + s + "' (gaussian|uniform)");
}

std::vector<Task> generate_dataset(const DatasetSpec& spec) {
  if (spec.n_tasks < 0) throw ValidationError("generate_dataset: n_tasks must be >= 0");
  if (!(spec.width > 0.0) || !(spec.height > 0.0)) throw ValidationError("generate_dataset: bad rectangle");
  if (spec.dist == ArrivalDist::kGaussian && !(spec.stddev > 0.0)) {
    throw ValidationError("generate_dataset: stddev must be positive");
  }
  if (spec.dist == ArrivalDist::kUniform && !(spec.low >= 0.0 && spec.high > spec.low)) {
    throw ValidationError("generate_dataset: need 0 <= low < high");
  }
  if (spec.dist == ArrivalDist::kGaussian && spec.mean + 8.0 * spec.stddev <= 0.0) {
    throw ValidationError("generate_dataset: distribution has no mass above zero");
  }
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> ux(0.0, spec.width);
  std::uniform_real_distribution<double> uy(0.0, spec.height);
  std::normal_distribution<double> normal(spec.mean, spec.stddev);
  std::uniform_real_distribution<double> uniform(spec.low, spec.high);

  struct Raw {
    Vec2 o, d;
    double t;
  };
  std::vector<Raw> raw;
  raw.reserve(static_cast<std::size_t>(spec.n_tasks));
  for (int i = 0; i < spec.n_tasks; ++i) {
    Raw r;
    r.o = Vec2(ux(rng), uy(rng));
    r.d = Vec2(ux(rng), uy(rng));
    if (spec.dist == ArrivalDist::kGaussian) {
      do {
        r.t = normal(rng);
      } while (r.t < 0.0);
    } else {
      r.t = uniform(rng);
    }
    raw.push_back(r);
  }
  std::stable_sort(raw.begin(), raw.end(), [](const Raw& a, const Raw& b) { return a.t < b.t; });
  std::vector<Task> tasks;
  tasks.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    tasks.push_back(make_task(static_cast<int>(i), raw[i].o, raw[i].d, raw[i].t));
  }
  return tasks;
}

void write_dataset(std::ostream& out, const std::vector<Task>& tasks) {
  for (const auto& t : tasks) {
    nlohmann::ordered_json j;
    j["id"] = t.id;
    j["ox"] = t.origin.x();
    j["oy"] = t.origin.y();
    j["dx"] = t.destination.x();
    j["dy"] = t.destination.y();
    j["t"] = t.arrival_time;
    out << j.dump() << '\n';
  }
}

void write_dataset_file(const std::string& path, const std::vector<Task>& tasks) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open " + path + " for writing");
  write_dataset(out, tasks);
  if (!out) throw Error("write failed for " + path);
}

std::vector<Task> read_dataset(std::istream& in) {
  std::vector<Task> tasks;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const Vec2 o(j.at("ox").get<double>(), j.at("oy").get<double>());
      const Vec2 d(j.at("dx").get<double>(), j.at("dy").get<double>());
      tasks.push_back(make_task(j.at("id").get<int>(), o, d, j.at("t").get<double>()));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("dataset line " + std::to_string(line_no) + ": " + e.what());
    }
    if (tasks.size() > 1) {
      const Task& a = tasks[tasks.size() - 2];
      const Task& b = tasks.back();
      if (b.arrival_time < a.arrival_time || (b.arrival_time == a.arrival_time && b.id <= a.id)) {
        throw ValidationError("dataset line " + std::to_string(line_no) + ": records not sorted by (t, id)");
      }
    }
  }
  return tasks;
}

std::vector<Task> read_dataset_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset " + path);
  return read_dataset(in);
}

}  // namespace mrta
