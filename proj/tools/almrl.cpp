// Command-line front end: run experiments, summarize them, and print the
// closed-form oracle for a known model.

#include <iostream>

#include "CLI11.hpp"

#include "almrl/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Continuous-time actor-critic for asset-liability management"};
  app.require_subcommand(1);

  almrl::cli::RunOptions run;
  std::uint64_t seed = 0;
  std::size_t workers = 0;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment from a JSON config");
  run_cmd->add_option("--config", run.config, "Config file")->required();
  run_cmd->add_option("--out", run.out, "Output directory")->required();
  auto* seed_opt = run_cmd->add_option("--seed", seed, "Base seed (overrides config key 'seed')");
  auto* workers_opt = run_cmd->add_option("--workers", workers, "Worker threads (default: ALMRL_WORKERS or config)")
                          ->check(CLI::PositiveNumber);

  almrl::cli::StatsOptions stats;
  auto* stats_cmd = app.add_subcommand("stats", "Curves, terminal rewards and p-values from rewards.csv");
  stats_cmd->add_option("--in", stats.in, "Directory containing rewards.csv")->required();
  stats_cmd->add_option("--out", stats.out, "Output directory")->required();
  stats_cmd->add_option("--window", stats.window, "Moving-average window")->check(CLI::PositiveNumber);
  stats_cmd->add_option("--tail", stats.tail, "Episodes averaged for the terminal reward")->check(CLI::PositiveNumber);

  almrl::cli::OracleOptions oracle;
  auto* oracle_cmd = app.add_subcommand("oracle", "Closed-form solution for known coefficients");
  oracle_cmd->add_option("--A", oracle.model.A)->required();
  oracle_cmd->add_option("--B", oracle.model.B)->required();
  oracle_cmd->add_option("--C", oracle.model.C)->required();
  oracle_cmd->add_option("--D", oracle.model.D)->required();
  oracle_cmd->add_option("--Q", oracle.Q, "Running-cost weight");
  oracle_cmd->add_option("--H", oracle.H, "Terminal-cost weight");
  oracle_cmd->add_option("--T", oracle.T, "Horizon");
  oracle_cmd->add_option("--x0", oracle.x0, "Initial deviation");

  CLI11_PARSE(app, argc, argv);

  if (*run_cmd) {
    if (*seed_opt) run.seed = seed;
    if (*workers_opt) run.workers = workers;
    return almrl::cli::cmd_run(run, std::cout, std::cerr);
  }
  if (*stats_cmd) return almrl::cli::cmd_stats(stats, std::cout, std::cerr);
  return almrl::cli::cmd_oracle(oracle, std::cout, std::cerr);
}
