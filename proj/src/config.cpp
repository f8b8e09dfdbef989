#include "mrta/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace mrta {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  const auto* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || p != end) throw ValidationError("config: '" + key + "' expects a number, got '" + v + "'");
  return x;
}

long long to_int(const std::string& key, const std::string& v) {
  long long x = 0;
  const auto* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || p != end) throw ValidationError("config: '" + key + "' expects an integer, got '" + v + "'");
  return x;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t x = 0;
  const auto* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || p != end) throw ValidationError("config: '" + key + "' expects an unsigned integer, got '" + v + "'");
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ValidationError("config: '" + key + "' expects true/false, got '" + v + "'");
}

template <std::size_t N>
std::array<double, N> to_array(const std::string& key, const std::string& v) {
  const auto parts = split(v, ',');
  if (parts.size() != N) {
    throw ValidationError("config: '" + key + "' expects " + std::to_string(N) + " comma-separated numbers");
  }
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = to_double(key, parts[i]);
  return out;
}

std::string fmt(double x) {
  std::ostringstream o;
  o << std::setprecision(17) << x;
  return o.str();
}

template <std::size_t N>
std::string fmt(const std::array<double, N>& a) {
  std::string s;
  for (std::size_t i = 0; i < N; ++i) s += (i ? "," : "") + fmt(a[i]);
  return s;
}

struct Field {
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define MRTA_DOUBLE(path, name)                                                                  \
  {                                                                                              \
    #name, Field {                                                                               \
      [](RunConfig& c, const std::string& k, const std::string& v) { c.path = to_double(k, v); }, \
          [](const RunConfig& c) { return fmt(c.path); }                                         \
    }                                                                                            \
  }
#define MRTA_INT(path, name)                                                                                   \
  {                                                                                                            \
    #name, Field {                                                                                             \
      [](RunConfig& c, const std::string& k, const std::string& v) { c.path = static_cast<int>(to_int(k, v)); }, \
          [](const RunConfig& c) { return std::to_string(c.path); }                                            \
    }                                                                                                          \
  }

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = {
      MRTA_DOUBLE(world.width, width),
      MRTA_DOUBLE(world.height, height),
      MRTA_INT(world.n_robots, n_robots),
      MRTA_INT(world.la_len, la_len),
      MRTA_INT(world.episode_tasks, episode_tasks),
      MRTA_DOUBLE(world.v_max, v_max),
      MRTA_DOUBLE(world.u_max, u_max),
      MRTA_DOUBLE(world.dt, dt),
      MRTA_DOUBLE(world.charge_threshold, charge_threshold),
      MRTA_DOUBLE(world.discharge_rate, discharge_rate),
      MRTA_DOUBLE(world.charge_rate, charge_rate),
      MRTA_DOUBLE(world.initial_charge_min, initial_charge_min),
      MRTA_DOUBLE(world.initial_charge_max, initial_charge_max),
      MRTA_DOUBLE(world.alpha, alpha),
      MRTA_DOUBLE(world.d_min, d_min),
      MRTA_DOUBLE(world.k_rep, k_rep),
      MRTA_DOUBLE(world.apf_force_cap, apf_force_cap),
      MRTA_DOUBLE(world.arrival_radius, arrival_radius),
      MRTA_DOUBLE(world.arrival_speed, arrival_speed),
      MRTA_DOUBLE(world.stall_window, stall_window),
      MRTA_DOUBLE(world.horizon, horizon),
      MRTA_DOUBLE(world.r_mask, r_mask),
      {"q_diag", Field{[](RunConfig& c, const std::string& k, const std::string& v) { c.world.q_diag = to_array<4>(k, v); },
                       [](const RunConfig& c) { return fmt(c.world.q_diag); }}},
      {"r_diag", Field{[](RunConfig& c, const std::string& k, const std::string& v) { c.world.r_diag = to_array<2>(k, v); },
                       [](const RunConfig& c) { return fmt(c.world.r_diag); }}},
      {"dock_positions",
       Field{[](RunConfig& c, const std::string& k, const std::string& v) {
               c.world.dock_positions.clear();
               if (v.empty()) return;
               for (const auto& pt : split(v, ';')) {
                 const auto xy = to_array<2>(k, pt);
                 c.world.dock_positions.emplace_back(xy[0], xy[1]);
               }
             },
             [](const RunConfig& c) {
               std::string s;
               for (std::size_t i = 0; i < c.world.dock_positions.size(); ++i) {
                 const auto& p = c.world.dock_positions[i];
                 s += (i ? ";" : "") + fmt(p.x()) + "," + fmt(p.y());
               }
               return s;
             }}},
      {"failed_robots",
       Field{[](RunConfig& c, const std::string& k, const std::string& v) {
               c.world.failed_robots.clear();
               if (v.empty()) return;
               for (const auto& id : split(v, ',')) c.world.failed_robots.push_back(static_cast<int>(to_int(k, id)));
             },
             [](const RunConfig& c) {
               std::string s;
               for (std::size_t i = 0; i < c.world.failed_robots.size(); ++i) {
                 s += (i ? "," : "") + std::to_string(c.world.failed_robots[i]);
               }
               return s;
             }}},
      {"seed", Field{[](RunConfig& c, const std::string& k, const std::string& v) { c.world.seed = to_u64(k, v); },
                     [](const RunConfig& c) { return std::to_string(c.world.seed); }}},

      MRTA_DOUBLE(train.ppo.gamma, gamma),
      MRTA_DOUBLE(train.ppo.lambda, lambda),
      MRTA_DOUBLE(train.ppo.learning_rate, learning_rate),
      MRTA_DOUBLE(train.ppo.entropy_coef, entropy_coef),
      MRTA_DOUBLE(train.ppo.value_coef, value_coef),
      MRTA_INT(train.ppo.batch_size, batch_size),
      MRTA_DOUBLE(train.ppo.clip, clip),
      MRTA_INT(train.ppo.epochs, epochs),
      MRTA_DOUBLE(train.ppo.reward_scale, reward_scale),
      MRTA_DOUBLE(train.ppo.adam_beta1, adam_beta1),
      MRTA_DOUBLE(train.ppo.adam_beta2, adam_beta2),
      MRTA_DOUBLE(train.ppo.adam_eps, adam_eps),
      {"normalize_advantages",
       Field{[](RunConfig& c, const std::string& k, const std::string& v) {
               c.train.ppo.normalize_advantages = to_bool(k, v);
             },
             [](const RunConfig& c) { return std::string(c.train.ppo.normalize_advantages ? "true" : "false"); }}},

      MRTA_INT(train.schedule.cycles, cycles),
      MRTA_INT(train.schedule.episodes_per_cycle, episodes_per_cycle),
      MRTA_INT(train.dataset_refresh, dataset_refresh),
      {"train_seed", Field{[](RunConfig& c, const std::string& k, const std::string& v) { c.train.seed = to_u64(k, v); },
                           [](const RunConfig& c) { return std::to_string(c.train.seed); }}},
      {"train_dist", Field{[](RunConfig& c, const std::string&, const std::string& v) {
                             c.train_dist = parse_arrival_dist(v);
                           },
                           [](const RunConfig& c) { return std::string(to_string(c.train_dist)); }}},
      {"train_only",
       Field{[](RunConfig& c, const std::string& k, const std::string& v) {
               if (v == "both") {
                 c.train.schedule.only.reset();
               } else if (v == "planner") {
                 c.train.schedule.only = Role::kPlanner;
               } else if (v == "executor") {
                 c.train.schedule.only = Role::kExecutor;
               } else {
                 throw ValidationError("config: '" + k + "' expects both|planner|executor");
               }
             },
             [](const RunConfig& c) {
               if (!c.train.schedule.only) return std::string("both");
               return std::string(*c.train.schedule.only == Role::kPlanner ? "planner" : "executor");
             }}},
  };
  return table;
}

#undef MRTA_DOUBLE
#undef MRTA_INT

void validate_run(const RunConfig& cfg) {
  cfg.world.validate();
  const auto& s = cfg.train.schedule;
  if (s.cycles < 0 || s.episodes_per_cycle < 1) throw ValidationError("config: need cycles >= 0, episodes_per_cycle >= 1");
  if (cfg.train.dataset_refresh < 1) throw ValidationError("config: dataset_refresh must be >= 1");
  const auto& p = cfg.train.ppo;
  if (p.batch_size < 1 || p.epochs < 1) throw ValidationError("config: batch_size and epochs must be >= 1");
  if (!(p.learning_rate > 0.0) || !(p.clip > 0.0)) throw ValidationError("config: learning_rate and clip must be positive");
  if (!(p.gamma >= 0.0 && p.gamma <= 1.0) || !(p.lambda >= 0.0 && p.lambda <= 1.0)) {
    throw ValidationError("config: gamma and lambda must lie in [0, 1]");
  }
}

}  // namespace

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  const auto& table = fields();
  const auto it = table.find(key);
  if (it == table.end()) throw ValidationError("config: unknown key '" + key + "'");
  it->second.set(cfg, key, value);
}

RunConfig parse_config(std::istream& in) {
  RunConfig cfg;
  std::set<std::string> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) {
      throw ValidationError("config line " + std::to_string(line_no) + ": repeated key '" + key + "'");
    }
    try {
      set_config_value(cfg, key, value);
    } catch (const ValidationError& e) {
      throw ValidationError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  validate_run(cfg);
  return cfg;
}

RunConfig parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path);
  return parse_config(in);
}

void write_config(std::ostream& out, const RunConfig& cfg) {
  for (const auto& [key, field] : fields()) out << key << " = " << field.get(cfg) << '\n';
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& kv : fields()) keys.push_back(kv.first);
  return keys;
}

DatasetFactory make_training_datasets(const RunConfig& cfg) {
  DatasetSpec spec;
  spec.n_tasks = cfg.world.episode_tasks;
  spec.dist = cfg.train_dist;
  spec.width = cfg.world.width;
  spec.height = cfg.world.height;
  const std::uint64_t base = cfg.train.seed;
  return [spec, base](int refresh_index) {
    DatasetSpec s = spec;
    s.seed = derive_seed(base, 0x7a11'0000ULL + static_cast<std::uint64_t>(refresh_index));
    return generate_dataset(s);
  };
}

}  // namespace mrta
