/**
 * @file market.hpp
 * @brief Surplus-deviation dynamics, episode simulation and reward, and the
 *        closed-form LQ solution used as the oracle for learned policies.
 *
 * State dynamics (scalar):
 *
 *     dx = (A x + B u) dt + (C x + D u) dW
 *
 * discretized by Euler-Maruyama on a uniform grid t_k = k dt, k = 0..K.
 */
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "almrl/rng.hpp"

namespace almrl {

struct MarketModel {
  double A = 0.0;  ///< internal drift rate
  double B = 0.0;  ///< control-to-drift gain
  double C = 0.0;  ///< state-to-volatility gain
  double D = 0.0;  ///< control-to-volatility gain
};

/// Cost weights and time grid. T is always an exact multiple of dt.
class ObjectiveSpec {
 public:
  ObjectiveSpec() = default;

  ObjectiveSpec(double Q, double H, double T, double dt, double x0) : Q_(Q), H_(H), dt_(dt), x0_(x0) {
    if (!(Q >= 0.0) || !(H >= 0.0)) throw std::invalid_argument("ObjectiveSpec: Q and H must be >= 0");
    if (!(T > 0.0) || !(dt > 0.0)) throw std::invalid_argument("ObjectiveSpec: T and dt must be > 0");
    if (!std::isfinite(x0)) throw std::invalid_argument("ObjectiveSpec: x0 must be finite");
    const double ratio = std::round(T / dt);
    if (ratio < 1.0) throw std::invalid_argument("ObjectiveSpec: horizon shorter than one step");
    const double snapped = ratio * dt;
    if (std::abs(snapped - T) > 1e-9 * T) {
      throw std::invalid_argument("ObjectiveSpec: T=" + std::to_string(T) +
                                  " is not an integer multiple of dt=" + std::to_string(dt));
    }
    steps_ = static_cast<std::size_t>(ratio);
    T_ = snapped;
  }

  double Q() const noexcept { return Q_; }
  double H() const noexcept { return H_; }
  double T() const noexcept { return T_; }
  double dt() const noexcept { return dt_; }
  double x0() const noexcept { return x0_; }
  std::size_t steps() const noexcept { return steps_; }
  double time_at(std::size_t k) const noexcept { return static_cast<double>(k) * dt_; }

 private:
  double Q_ = 1.0;
  double H_ = 1.0;
  double T_ = 1.0;
  double dt_ = 0.01;
  double x0_ = 1.0;
  std::size_t steps_ = 100;
};

/// One simulated episode. For a completed episode states has K+1 entries;
/// a diverged episode is truncated at the step where |x| left the guard,
/// with the last state clamped to the guard value.
struct Trajectory {
  std::vector<double> times;
  std::vector<double> states;
  std::vector<double> actions;
  std::vector<double> noises;
  bool diverged = false;

  std::size_t steps() const noexcept { return actions.size(); }
};

inline constexpr double kDivergenceBound = 1e12;

/// Per-episode environment noise for one scenario. Episode n always gets the
/// same stream regardless of how many draws earlier episodes consumed.
class EnvironmentNoise {
 public:
  EnvironmentNoise(std::uint64_t base_seed, std::uint64_t scenario_key) noexcept
      : base_seed_(base_seed), scenario_key_(scenario_key) {}

  Stream episode(std::size_t n) const noexcept {
    return Stream(SeedSpec{base_seed_, hash_indices({scenario_key_, 0x454E56ULL, n})});
  }

 private:
  std::uint64_t base_seed_;
  std::uint64_t scenario_key_;
};

constexpr double drift(const MarketModel& m, double x, double u) noexcept { return m.A * x + m.B * u; }

/// Signed volatility; squared only where an expectation is taken.
constexpr double diffusion(const MarketModel& m, double x, double u) noexcept { return m.C * x + m.D * u; }

inline double euler_step(const MarketModel& m, double x, double u, double dt, double z) noexcept {
  return x + drift(m, x, u) * dt + diffusion(m, x, u) * std::sqrt(dt) * z;
}

/**
 * Simulates one episode under `strategy`, a callable (t, x) -> u.
 *
 * Environment noise comes from `env`; any randomness of the strategy must be
 * drawn from its own stream so that different strategies see the same noise.
 */
template <class Strategy>
Trajectory simulate_episode(const MarketModel& model, const ObjectiveSpec& objective, Strategy&& strategy,
                            Stream& env) {
  const std::size_t K = objective.steps();
  const double dt = objective.dt();
  Trajectory traj;
  traj.times.reserve(K + 1);
  traj.states.reserve(K + 1);
  traj.actions.reserve(K);
  traj.noises.reserve(K);

  double x = objective.x0();
  traj.times.push_back(0.0);
  traj.states.push_back(x);
  for (std::size_t k = 0; k < K; ++k) {
    const double t = objective.time_at(k);
    const double u = strategy(t, x);
    const double z = env.standard_normal();
    x = euler_step(model, x, u, dt, z);
    traj.actions.push_back(u);
    traj.noises.push_back(z);
    traj.times.push_back(objective.time_at(k + 1));
    if (!(std::abs(x) <= kDivergenceBound)) {
      x = std::signbit(x) ? -kDivergenceBound : kDivergenceBound;
      traj.states.push_back(x);
      traj.diverged = true;
      break;
    }
    traj.states.push_back(x);
  }
  return traj;
}

/// Discretized objective: running cost on t_0..t_{K-1}, terminal cost on the last state.
inline double episode_reward(const Trajectory& traj, const ObjectiveSpec& objective) {
  const double dt = objective.dt();
  double running = 0.0;
  for (std::size_t k = 0; k < traj.steps(); ++k) {
    running += traj.states[k] * traj.states[k];
  }
  const double xT = traj.states.back();
  return -0.5 * objective.Q() * running * dt - 0.5 * objective.H() * xT * xT;
}

inline void require_nonzero_D(const MarketModel& m) {
  if (m.D == 0.0) throw std::domain_error("market model: D must be nonzero");
}

/// Lambda = (B^2 + 2BCD - 2AD^2) / D^2.
inline double classical_lambda(const MarketModel& m) {
  require_nonzero_D(m);
  const double D2 = m.D * m.D;
  return (m.B * m.B + 2.0 * m.B * m.C * m.D - 2.0 * m.A * D2) / D2;
}

/// Optimal feedback gain -(B + CD)/D^2 of the classical problem.
inline double classical_gain(const MarketModel& m) {
  require_nonzero_D(m);
  return -(m.B + m.C * m.D) / (m.D * m.D);
}

inline constexpr double kLambdaLimit = 1e-12;

/// True when classical_value falls back to its Lambda -> 0 limit.
inline bool classical_lambda_degenerate(const MarketModel& m) { return std::abs(classical_lambda(m)) < kLambdaLimit; }

/// Optimal value V(t, x) = -1/2 [Q/L + (H - Q/L) e^{L(t-T)}] x^2.
inline double classical_value(const MarketModel& m, const ObjectiveSpec& objective, double t, double x) {
  const double L = classical_lambda(m);
  const double Q = objective.Q();
  const double H = objective.H();
  const double tau = t - objective.T();
  double k1;
  if (tau == 0.0) {
    k1 = H;
  } else if (std::abs(L) < kLambdaLimit) {
    k1 = Q * (-tau) + H;
  } else {
    k1 = Q / L + (H - Q / L) * std::exp(L * tau);
  }
  return -0.5 * k1 * x * x;
}

/// Differential entropy of N(., variance).
inline double gaussian_entropy(double variance) {
  if (!(variance > 0.0)) throw std::domain_error("gaussian_entropy: variance must be > 0");
  return 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * variance);
}

}  // namespace almrl
