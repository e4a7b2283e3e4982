/**
 * @file cli.hpp
 * @brief The `run`, `stats` and `oracle` commands behind the almrl tool.
 *
 * Exit codes: 0 success, 1 configuration or I/O failure, 3 some runs failed
 * (outputs are still written).
 */
#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include "almrl/io.hpp"

namespace almrl::cli {

inline constexpr const char* kWorkersEnv = "ALMRL_WORKERS";

struct RunOptions {
  std::filesystem::path config;
  std::filesystem::path out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
};

/// Worker count from ALMRL_WORKERS, if set to a positive integer.
inline std::optional<std::size_t> workers_from_env() {
  const char* v = std::getenv(kWorkersEnv);
  if (v == nullptr || *v == '\0') return std::nullopt;
  char* end = nullptr;
  const auto n = std::strtoull(v, &end, 10);
  if (*end != '\0' || n == 0) return std::nullopt;
  return static_cast<std::size_t>(n);
}

inline int cmd_run(const RunOptions& opt, std::ostream& log, std::ostream& err) {
  ExperimentConfig config;
  try {
    config = load_config(opt.config);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  if (opt.seed) config.base_seed = *opt.seed;
  if (opt.workers) {
    config.workers = *opt.workers;
  } else if (auto env = workers_from_env()) {
    config.workers = *env;
  }

  std::vector<RunResult> results;
  try {
    results = run_experiment(config);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    std::filesystem::create_directories(opt.out);
    std::ostringstream rewards;
    write_rewards_csv(rewards, results);
    write_text_file(opt.out / "rewards.csv", rewards.str());
    write_text_file(opt.out / "params.json", params_to_json(results).dump(2) + "\n");
    write_text_file(opt.out / "manifest.json", manifest_json(config).dump(2) + "\n");
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  std::size_t failed = 0;
  for (const auto& r : results) {
    if (!r.ok()) {
      ++failed;
      err << "run failed: method=" << method_name(r.method) << " scenario=" << r.scenario_index << ": " << r.error
          << '\n';
    }
  }
  log << "wrote " << results.size() << " runs to " << opt.out.string() << '\n';
  return failed == 0 ? 0 : 3;
}

struct StatsOptions {
  std::filesystem::path in;
  std::filesystem::path out;
  std::size_t window = 200;
  std::size_t tail = 500;
};

inline int cmd_stats(const StatsOptions& opt, std::ostream& log, std::ostream& err) {
  try {
    const auto path = opt.in / "rewards.csv";
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    const auto table = read_rewards_csv(in);
    const auto stats = compute_stats(table, opt.window, opt.tail);
    std::filesystem::create_directories(opt.out);
    write_text_file(opt.out / "curves.csv", stats.curves_csv);
    write_text_file(opt.out / "terminal.csv", stats.terminal_csv);
    write_text_file(opt.out / "pvalues.csv", stats.pvalues_csv);
    log << "wrote statistics for " << table.methods.size() << " methods to " << opt.out.string() << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

struct OracleOptions {
  MarketModel model;
  double Q = 1.0;
  double H = 1.0;
  double T = 1.0;
  double x0 = 1.0;
};

/// Prints Lambda, the optimal gain and V(0, x0) for a known model.
inline int cmd_oracle(const OracleOptions& opt, std::ostream& out, std::ostream& err) {
  try {
    const ObjectiveSpec objective(opt.Q, opt.H, opt.T, opt.T, opt.x0);
    const double lambda = classical_lambda(opt.model);
    out << "lambda " << format_double(lambda) << '\n';
    out << "phi1_star " << format_double(classical_gain(opt.model)) << '\n';
    out << "value " << format_double(classical_value(opt.model, objective, 0.0, opt.x0)) << '\n';
    if (classical_lambda_degenerate(opt.model)) out << "note |lambda| < 1e-12, value uses the lambda -> 0 limit\n";
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace almrl::cli
