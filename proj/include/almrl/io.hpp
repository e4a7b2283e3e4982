/**
 * @file io.hpp
 * @brief Experiment configuration (JSON) and result files (CSV / JSON).
 *
 * Config keys (all optional; defaults in brackets):
 *
 *   seed [0]  episodes [20000]  scenarios [200]  dt [0.01]  T [1]  Q [1]  H [1]
 *   x0 [1]  methods [["ALMRL","DCPPI","ACS","MBP"]]  workers [1]
 *   checkpoint_dir [""]
 *   almrl:      c_gamma [1] lr_exponent [0.75] temp_exponent [0.25] U_theta [100]
 *               U1 [100] U2 [100] epsilon [0.01] phi2_init [1] k_floor [1e-4]
 *   multiplier: lr_exponent [0.75]            (DCPPI and ACS)
 *   acs:        delta [0.1]
 *   mbp:        sigma_e [0.1] d_floor [0.01] refit_every [1]
 *
 * Unknown keys are rejected. Numbers in CSV files use 17 significant digits,
 * so parsing them back gives the original doubles.
 */
#pragma once

#include <algorithm>
#include <cerrno>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "json.hpp"

#include "almrl/harness.hpp"
#include "almrl/stats.hpp"

namespace almrl {

inline constexpr std::string_view kArtifactVersion = "1.0.0";

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest text that is guaranteed to parse back to the same double.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

namespace detail {

using json = nlohmann::ordered_json;

class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string prefix) : obj_(obj), prefix_(std::move(prefix)) {
    if (!obj_.is_object()) throw ConfigError("config: '" + where() + "' must be an object");
  }

  template <class T>
  void read(const std::string& key, T& out) {
    seen_.push_back(key);
    auto it = obj_.find(key);
    if (it == obj_.end()) return;
    try {
      if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
        if (!it->is_number_unsigned()) throw ConfigError("");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!it->is_number()) throw ConfigError("");
      }
      out = it->template get<T>();
    } catch (const std::exception&) {
      throw ConfigError("config: invalid value for key '" + qualified(key) + "'");
    }
  }

  const json* child(const std::string& key) {
    seen_.push_back(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  void reject_unknown() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (std::find(seen_.begin(), seen_.end(), it.key()) == seen_.end()) {
        throw ConfigError("config: unknown key '" + qualified(it.key()) + "'");
      }
    }
  }

  std::string qualified(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

 private:
  std::string where() const { return prefix_.empty() ? "<root>" : prefix_; }

  const json& obj_;
  std::string prefix_;
  std::vector<std::string> seen_;
};

template <class Fn>
void read_section(ObjectReader& parent, const std::string& key, Fn&& fn) {
  if (const json* sub = parent.child(key)) {
    ObjectReader r(*sub, parent.qualified(key));
    fn(r);
    r.reject_unknown();
  }
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::ordered_json& doc) {
  ExperimentConfig c;
  detail::ObjectReader root(doc, "");
  root.read("seed", c.base_seed);
  root.read("episodes", c.episodes);
  root.read("scenarios", c.scenarios);
  root.read("dt", c.dt);
  root.read("T", c.T);
  root.read("Q", c.Q);
  root.read("H", c.H);
  root.read("x0", c.x0);
  root.read("workers", c.workers);
  root.read("checkpoint_dir", c.checkpoint_dir);
  if (const auto* methods = root.child("methods")) {
    if (!methods->is_array()) throw ConfigError("config: 'methods' must be an array of method names");
    c.methods.clear();
    for (const auto& m : *methods) {
      const auto parsed = m.is_string() ? parse_method(m.get<std::string>()) : std::nullopt;
      if (!parsed) throw ConfigError("config: unknown method " + m.dump() + " (expected ALMRL, DCPPI, ACS, MBP)");
      if (std::find(c.methods.begin(), c.methods.end(), *parsed) != c.methods.end()) {
        throw ConfigError("config: duplicate method " + m.dump());
      }
      c.methods.push_back(*parsed);
    }
  }
  detail::read_section(root, "almrl", [&](detail::ObjectReader& r) {
    r.read("c_gamma", c.almrl.schedules.c_gamma);
    r.read("lr_exponent", c.almrl.schedules.lr_exponent);
    r.read("temp_exponent", c.almrl.schedules.temp_exponent);
    r.read("U_theta", c.almrl.bounds.U_theta);
    r.read("U1", c.almrl.bounds.U1);
    r.read("U2", c.almrl.bounds.U2);
    r.read("epsilon", c.almrl.bounds.epsilon);
    r.read("phi2_init", c.almrl.phi2_init);
    r.read("k_floor", c.almrl.k_floor);
  });
  detail::read_section(root, "multiplier",
                       [&](detail::ObjectReader& r) { r.read("lr_exponent", c.baselines.lr_exponent); });
  detail::read_section(root, "acs", [&](detail::ObjectReader& r) { r.read("delta", c.baselines.acs.delta); });
  detail::read_section(root, "mbp", [&](detail::ObjectReader& r) {
    r.read("sigma_e", c.baselines.sigma_e);
    r.read("d_floor", c.baselines.d_floor);
    r.read("refit_every", c.baselines.refit_every);
  });
  root.reject_unknown();

  const auto& b = c.almrl.bounds;
  if (!(b.epsilon > 0.0) || !(b.U2 >= b.epsilon) || !(b.U1 > 0.0) || !(b.U_theta > 0.0)) {
    throw ConfigError("config: projection bounds need 0 < epsilon <= U2, U1 > 0, U_theta > 0");
  }
  if (!(c.almrl.phi2_init > 0.0)) throw ConfigError("config: almrl.phi2_init must be > 0");
  if (!(c.almrl.k_floor > 0.0)) throw ConfigError("config: almrl.k_floor must be > 0");
  if (!(c.baselines.acs.delta >= 0.0)) throw ConfigError("config: acs.delta must be >= 0");
  if (!(c.baselines.d_floor > 0.0)) throw ConfigError("config: mbp.d_floor must be > 0");
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

/// Fully resolved config in the same schema parse_config accepts.
inline nlohmann::ordered_json config_to_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  j["seed"] = c.base_seed;
  j["episodes"] = c.episodes;
  j["scenarios"] = c.scenarios;
  j["dt"] = c.dt;
  j["T"] = c.T;
  j["Q"] = c.Q;
  j["H"] = c.H;
  j["x0"] = c.x0;
  auto methods = nlohmann::ordered_json::array();
  for (Method m : c.methods) methods.push_back(std::string(method_name(m)));
  j["methods"] = methods;
  j["workers"] = c.workers;
  j["checkpoint_dir"] = c.checkpoint_dir;
  const auto& a = c.almrl;
  j["almrl"] = {{"c_gamma", a.schedules.c_gamma},   {"lr_exponent", a.schedules.lr_exponent},
                {"temp_exponent", a.schedules.temp_exponent}, {"U_theta", a.bounds.U_theta},
                {"U1", a.bounds.U1},                  {"U2", a.bounds.U2},
                {"epsilon", a.bounds.epsilon},        {"phi2_init", a.phi2_init},
                {"k_floor", a.k_floor}};
  j["multiplier"] = {{"lr_exponent", c.baselines.lr_exponent}};
  j["acs"] = {{"delta", c.baselines.acs.delta}};
  j["mbp"] = {{"sigma_e", c.baselines.sigma_e},
              {"d_floor", c.baselines.d_floor},
              {"refit_every", c.baselines.refit_every}};
  return j;
}

// ---------------------------------------------------------------------------
// Result files
// ---------------------------------------------------------------------------

inline void write_rewards_csv(std::ostream& out, const std::vector<RunResult>& results) {
  out << "method,scenario,episode,reward\n";
  for (const auto& r : results) {
    const std::string name(method_name(r.method));
    for (std::size_t e = 0; e < r.rewards.size(); ++e) {
      out << name << ',' << r.scenario_index << ',' << e << ',' << format_double(r.rewards[e]) << '\n';
    }
  }
}

inline nlohmann::ordered_json params_to_json(const std::vector<RunResult>& results) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : results) {
    nlohmann::ordered_json j;
    j["method"] = std::string(method_name(r.method));
    j["scenario"] = r.scenario_index;
    j["model"] = {{"A", r.model.A}, {"B", r.model.B}, {"C", r.model.C}, {"D", r.model.D}};
    nlohmann::ordered_json p = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.params) p[k] = v;
    j["params"] = p;
    j["diverged_episodes"] = r.diverged_episodes;
    j["error"] = r.error;
    arr.push_back(std::move(j));
  }
  return arr;
}

inline nlohmann::ordered_json manifest_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  j["artifact"] = "almrl";
  j["version"] = std::string(kArtifactVersion);
  j["seed"] = c.base_seed;
  j["rng"] = "xoshiro256** seeded by splitmix64; Box-Muller normals";
  j["config"] = config_to_json(c);
  return j;
}

/// Rewards grouped per method (in order of first appearance) and per scenario.
struct RewardTable {
  std::vector<std::string> methods;
  std::map<std::string, std::map<std::size_t, std::vector<double>>> runs;
};

namespace detail {

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::uint64_t parse_index(std::string_view field, const std::string& where) {
  const std::string s(field);
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    throw InputError(where + ": expected a non-negative integer, got '" + s + "'");
  }
  errno = 0;
  const auto v = std::strtoull(s.c_str(), nullptr, 10);
  if (errno == ERANGE) throw InputError(where + ": integer out of range");
  return v;
}

inline double parse_number(std::string_view field, const std::string& where) {
  const std::string s(field);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw InputError(where + ": expected a number, got '" + s + "'");
  return v;
}

}  // namespace detail

inline RewardTable read_rewards_csv(std::istream& in, const std::string& name = "rewards.csv") {
  RewardTable table;
  std::string line;
  if (!std::getline(in, line)) throw InputError(name + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "method,scenario,episode,reward") {
    throw InputError(name + ":1: expected header 'method,scenario,episode,reward', got '" + line + "'");
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = name + ":" + std::to_string(lineno);
    const auto f = detail::split_csv(line);
    if (f.size() != 4) {
      throw InputError(where + ": expected 4 columns, got " + std::to_string(f.size()));
    }
    const std::string method(f[0]);
    if (method.empty()) throw InputError(where + ": column 'method' is empty");
    const auto scenario = detail::parse_index(f[1], where + " column 'scenario'");
    const auto episode = detail::parse_index(f[2], where + " column 'episode'");
    const double reward = detail::parse_number(f[3], where + " column 'reward'");
    if (!table.runs.contains(method)) table.methods.push_back(method);
    auto& series = table.runs[method][scenario];
    if (episode != series.size()) {
      throw InputError(where + ": episode " + std::to_string(episode) + " out of sequence (expected " +
                       std::to_string(series.size()) + ")");
    }
    series.push_back(reward);
  }
  if (table.methods.empty()) throw InputError(name + ": no reward rows");
  return table;
}

// ---------------------------------------------------------------------------
// Statistics files
// ---------------------------------------------------------------------------

struct StatsOutput {
  std::string curves_csv;
  std::string terminal_csv;
  std::string pvalues_csv;
};

inline StatsOutput compute_stats(const RewardTable& table, std::size_t window = 200, std::size_t tail = 500) {
  const auto& first_runs = table.runs.at(table.methods.front());
  std::vector<std::size_t> scenario_set;
  for (const auto& [s, _] : first_runs) scenario_set.push_back(s);

  std::ostringstream curves, terminal, pvalues;
  curves << "method,episode,mean,smoothed,q25,q75\n";
  terminal << "method,scenario,terminal_reward\n";
  pvalues << "row_method,col_method,p\n";

  std::vector<std::vector<double>> terminals;
  for (const auto& method : table.methods) {
    const auto& runs = table.runs.at(method);
    std::vector<std::size_t> scen;
    for (const auto& [s, _] : runs) scen.push_back(s);
    if (scen != scenario_set) {
      throw InputError("rewards.csv: method '" + method + "' does not cover the same scenarios as '" +
                       table.methods.front() + "'");
    }
    std::vector<std::vector<double>> series;
    for (const auto& [s, r] : runs) {
      if (!series.empty() && r.size() != series.front().size()) {
        throw InputError("rewards.csv: method '" + method + "' scenario " + std::to_string(s) + " has " +
                         std::to_string(r.size()) + " episodes, expected " + std::to_string(series.front().size()));
      }
      series.push_back(r);
    }
    const auto summary = summarize_curves(series, window);
    for (std::size_t e = 0; e < summary.mean.size(); ++e) {
      curves << method << ',' << e << ',' << format_double(summary.mean[e]) << ','
             << format_double(summary.smoothed[e]) << ',' << format_double(summary.q25[e]) << ','
             << format_double(summary.q75[e]) << '\n';
    }
    std::vector<double> term;
    for (const auto& [s, r] : runs) {
      const double v = terminal_reward(r, tail).value;
      term.push_back(v);
      terminal << method << ',' << s << ',' << format_double(v) << '\n';
    }
    terminals.push_back(std::move(term));
  }

  const auto pm = pvalue_matrix(table.methods, terminals);
  for (std::size_t i = 0; i < pm.methods.size(); ++i) {
    for (std::size_t j = 0; j < pm.methods.size(); ++j) {
      pvalues << pm.methods[i] << ',' << pm.methods[j] << ',' << format_double(pm.p[i][j]) << '\n';
    }
  }
  return {curves.str(), terminal.str(), pvalues.str()};
}

inline void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
  if (!out) throw InputError("write failed for " + path.string());
}

}  // namespace almrl
