/**
 * @file harness.hpp
 * @brief Randomized scenarios and multi-method experiment execution.
 *
 * Stream layout for base seed s, scenario i and method j:
 *   scenario model          (s, hash(i, "SCN"))
 *   environment noise       (s, hash(hash(i, "ENV"), "ENV", episode))   shared by all methods
 *   method randomness       (s, hash(i, j, 0, "ACT"))                   actions, MBP dither, multiplier init
 *   learner initialization  (s, hash(i, j, 0, "INIT"))
 * j is the fixed method id, so a run does not depend on which other methods
 * are part of the experiment.
 */
#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "almrl/actor_critic.hpp"
#include "almrl/baselines.hpp"
#include "almrl/market.hpp"
#include "almrl/rng.hpp"

namespace almrl {

enum class Method : std::uint64_t { ALMRL = 0, DCPPI = 1, ACS = 2, MBP = 3 };

inline constexpr Method kAllMethods[] = {Method::ALMRL, Method::DCPPI, Method::ACS, Method::MBP};

constexpr std::string_view method_name(Method m) noexcept {
  switch (m) {
    case Method::ALMRL:
      return "ALMRL";
    case Method::DCPPI:
      return "DCPPI";
    case Method::ACS:
      return "ACS";
    case Method::MBP:
      return "MBP";
  }
  return "?";
}

inline std::optional<Method> parse_method(std::string_view name) noexcept {
  for (Method m : kAllMethods) {
    if (method_name(m) == name) return m;
  }
  return std::nullopt;
}

namespace stream_tag {
inline constexpr std::uint64_t kScenario = 0x53434EULL;  // "SCN"
inline constexpr std::uint64_t kEnvironment = 0x454E56ULL;
inline constexpr std::uint64_t kAction = 0x414354ULL;
inline constexpr std::uint64_t kInit = 0x494E4954ULL;
}  // namespace stream_tag

struct ScenarioSpec {
  std::size_t scenario_index = 0;
  SeedSpec seed;
  MarketModel model;
};

struct ScenarioRanges {
  double A_lo = -0.05, A_hi = 0.05;
  double B_lo = 0.05, B_hi = 0.15;
  double C_lo = 0.1, C_hi = 0.2;
  double D_lo = 0.1, D_hi = 0.2;
};

inline ScenarioSpec draw_scenario(std::uint64_t base_seed, std::size_t scenario_index,
                                  const ScenarioRanges& r = {}) {
  ScenarioSpec spec;
  spec.scenario_index = scenario_index;
  spec.seed = {base_seed, hash_indices({scenario_index, stream_tag::kScenario})};
  Stream s(spec.seed);
  spec.model.A = s.uniform(r.A_lo, r.A_hi);
  spec.model.B = s.uniform(r.B_lo, r.B_hi);
  spec.model.C = s.uniform(r.C_lo, r.C_hi);
  spec.model.D = s.uniform(r.D_lo, r.D_hi);
  return spec;
}

inline EnvironmentNoise scenario_noise(std::uint64_t base_seed, std::size_t scenario_index) {
  return EnvironmentNoise(base_seed, hash_indices({scenario_index, stream_tag::kEnvironment}));
}

inline SeedSpec method_seed(std::uint64_t base_seed, std::size_t scenario_index, Method m, std::uint64_t tag,
                            std::uint64_t repeat = 0) {
  return {base_seed, hash_indices({scenario_index, static_cast<std::uint64_t>(m), repeat, tag})};
}

struct ExperimentConfig {
  std::size_t episodes = 20000;
  std::size_t scenarios = 200;
  double dt = 0.01;
  double T = 1.0;
  double Q = 1.0;
  double H = 1.0;
  double x0 = 1.0;
  std::vector<Method> methods{Method::ALMRL, Method::DCPPI, Method::ACS, Method::MBP};
  std::uint64_t base_seed = 0;
  std::size_t workers = 1;
  LearnerConfig almrl;
  BaselineConfig baselines;
  std::string checkpoint_dir;  ///< empty disables per-run checkpoint files

  ObjectiveSpec objective() const { return ObjectiveSpec(Q, H, T, dt, x0); }

  void validate() const {
    if (episodes < 1) throw std::invalid_argument("episodes must be >= 1");
    if (scenarios < 1) throw std::invalid_argument("scenarios must be >= 1");
    if (methods.empty()) throw std::invalid_argument("methods must not be empty");
    (void)objective();
  }
};

struct RunResult {
  Method method = Method::ALMRL;
  std::size_t scenario_index = 0;
  MarketModel model;
  std::vector<double> rewards;
  std::vector<std::pair<std::string, double>> params;
  std::size_t diverged_episodes = 0;
  std::string error;  ///< non-empty when the run failed

  bool ok() const noexcept { return error.empty(); }
};

/// Executes one (scenario, method) run. Never throws; failures land in RunResult::error.
inline RunResult run_single(const ExperimentConfig& config, const ScenarioSpec& scenario, Method method) {
  RunResult res;
  res.method = method;
  res.scenario_index = scenario.scenario_index;
  res.model = scenario.model;
  try {
    const ObjectiveSpec objective = config.objective();
    const auto noise = scenario_noise(config.base_seed, scenario.scenario_index);
    Stream act(method_seed(config.base_seed, scenario.scenario_index, method, stream_tag::kAction));
    if (method == Method::ALMRL) {
      Stream init(method_seed(config.base_seed, scenario.scenario_index, method, stream_tag::kInit));
      auto summary = train(scenario.model, objective, initial_learner_state(config.almrl, init), config.episodes,
                           noise, act);
      res.rewards = std::move(summary.state.rewards);
      res.diverged_episodes = summary.diverged_episodes;
      const auto& s = summary.state;
      res.params = {{"theta1", s.critic.theta1}, {"theta2", s.critic.theta2}, {"theta3", s.critic.theta3},
                    {"phi1", s.policy.phi1},     {"phi2", s.policy.phi2}};
    } else {
      const BaselineKind kind = method == Method::DCPPI ? BaselineKind::DCPPI
                                : method == Method::ACS ? BaselineKind::ACS
                                                        : BaselineKind::MBP;
      auto run = run_baseline(kind, scenario.model, objective, config.episodes, noise, act, config.baselines);
      res.rewards = std::move(run.rewards);
      res.params = std::move(run.params);
      res.diverged_episodes = run.diverged_episodes;
    }
  } catch (const std::exception& e) {
    res.error = e.what();
  }
  return res;
}

namespace detail {
inline void write_checkpoint(const std::filesystem::path& dir, const RunResult& r) {
  std::filesystem::create_directories(dir);
  const auto file = dir / (std::string(method_name(r.method)) + "_" + std::to_string(r.scenario_index) + ".csv");
  std::ofstream out(file);
  out << "episode,reward\n";
  char buf[64];
  for (std::size_t e = 0; e < r.rewards.size(); ++e) {
    std::snprintf(buf, sizeof buf, "%.17g", r.rewards[e]);
    out << e << ',' << buf << '\n';
  }
}
}  // namespace detail

/**
 * Runs every (scenario, method) pair. Results are ordered scenario-major,
 * then by the order of config.methods, independent of worker count.
 */
inline std::vector<RunResult> run_experiment(const ExperimentConfig& config) {
  config.validate();
  std::vector<ScenarioSpec> scenarios;
  scenarios.reserve(config.scenarios);
  for (std::size_t i = 0; i < config.scenarios; ++i) scenarios.push_back(draw_scenario(config.base_seed, i));

  const std::size_t n_methods = config.methods.size();
  const std::size_t n_tasks = scenarios.size() * n_methods;
  std::vector<RunResult> results(n_tasks);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t task = next.fetch_add(1); task < n_tasks; task = next.fetch_add(1)) {
      const auto& sc = scenarios[task / n_methods];
      results[task] = run_single(config, sc, config.methods[task % n_methods]);
      if (!config.checkpoint_dir.empty()) {
        try {
          detail::write_checkpoint(config.checkpoint_dir, results[task]);
        } catch (const std::exception& e) {
          if (results[task].ok()) results[task].error = std::string("checkpoint: ") + e.what();
        }
      }
    }
  };

  const std::size_t n_workers = std::max<std::size_t>(1, std::min(config.workers, n_tasks));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }
  return results;
}

}  // namespace almrl
