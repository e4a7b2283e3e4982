/**
 * @file actor_critic.hpp
 * @brief Model-free continuous-time soft actor-critic for the scalar LQ
 *        surplus problem.
 *
 * Critic:  J(t, x; theta) = -1/2 k1(t) x^2 + k3(t)
 *          k1(t) = max(theta1 + (H - theta1) e^{theta2 (t - T)}, k_floor)
 *          k3(t) = theta3 (T - t)
 * Actor:   u ~ N(phi1 x, phi2)
 *
 * After each episode all three parameter blocks are moved along discretized
 * martingale-orthogonality directions built from the same TD bracket
 *
 *     J(t_{k+1}, x_{k+1}) - J(t_k, x_k) - 1/2 Q x_k^2 dt + gamma p(phi2) dt,
 *
 * and projected back onto their bounded sets. The phi2 direction is taken
 * with respect to 1/phi2, which removes the 1/phi2 factor from the score.
 */
#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "almrl/market.hpp"
#include "almrl/rng.hpp"

namespace almrl {

struct CriticParams {
  double theta1 = 1.0;
  double theta2 = 0.0;
  double theta3 = 0.0;

  std::array<double, 3> as_array() const noexcept { return {theta1, theta2, theta3}; }
  static CriticParams from_array(const std::array<double, 3>& v) noexcept { return {v[0], v[1], v[2]}; }
  double norm() const noexcept { return std::sqrt(theta1 * theta1 + theta2 * theta2 + theta3 * theta3); }
};

struct PolicyParams {
  double phi1 = 0.0;  ///< mean gain
  double phi2 = 1.0;  ///< variance
};

struct Schedules {
  double c_gamma = 1.0;
  double lr_exponent = 0.75;    ///< a(n) = (n+1)^-lr_exponent
  double temp_exponent = 0.25;  ///< b(n) = (n+1)^temp_exponent
};

struct ProjectionBounds {
  double U_theta = 100.0;
  double U1 = 100.0;
  double U2 = 100.0;
  double epsilon = 0.01;
};

struct LearnerConfig {
  Schedules schedules;
  ProjectionBounds bounds;
  double phi2_init = 1.0;
  double k_floor = 1e-4;
};

struct LearnerState {
  std::size_t episode = 0;
  CriticParams critic;
  PolicyParams policy;
  LearnerConfig config;
  std::vector<double> rewards;
};

// ---------------------------------------------------------------------------
// Schedules
// ---------------------------------------------------------------------------

inline double learning_rate(std::size_t n, double exponent = 0.75) {
  return std::pow(static_cast<double>(n) + 1.0, -exponent);
}

inline double exploration_schedule(std::size_t n, const Schedules& s) {
  return std::pow(static_cast<double>(n) + 1.0, s.temp_exponent);
}

/// Critic temperature gamma(n) = c_gamma / b(n).
inline double gamma_schedule(std::size_t n, const Schedules& s) { return s.c_gamma / exploration_schedule(n, s); }

// ---------------------------------------------------------------------------
// Projections
// ---------------------------------------------------------------------------

/// Euclidean projection onto the closed ball of the given radius.
template <std::size_t N>
std::array<double, N> project_ball(std::array<double, N> v, double radius) {
  double sq = 0.0;
  for (double c : v) sq += c * c;
  const double norm = std::sqrt(sq);
  if (norm <= radius) return v;
  const double scale = radius / norm;
  for (double& c : v) c *= scale;
  return v;
}

constexpr double project_interval(double s, double lo, double hi) noexcept { return s < lo ? lo : (s > hi ? hi : s); }

// ---------------------------------------------------------------------------
// Critic
// ---------------------------------------------------------------------------

namespace detail {
inline double k1_unclamped(double t, const CriticParams& th, const ObjectiveSpec& obj) {
  return th.theta1 + (obj.H() - th.theta1) * std::exp(th.theta2 * (t - obj.T()));
}
}  // namespace detail

inline double k1(double t, const CriticParams& theta, const ObjectiveSpec& objective, double k_floor = 1e-4) {
  const double raw = detail::k1_unclamped(t, theta, objective);
  return raw > k_floor ? raw : k_floor;
}

inline double k3(double t, const CriticParams& theta, const ObjectiveSpec& objective) {
  return theta.theta3 * (objective.T() - t);
}

inline double critic_value(double t, double x, const CriticParams& theta, const ObjectiveSpec& objective,
                           double k_floor = 1e-4) {
  return -0.5 * k1(t, theta, objective, k_floor) * x * x + k3(t, theta, objective);
}

/// dJ/dtheta. The theta1/theta2 components vanish where the k_floor clamp is active.
inline std::array<double, 3> critic_grad(double t, double x, const CriticParams& theta, const ObjectiveSpec& objective,
                                         double k_floor = 1e-4) {
  const double tau = t - objective.T();
  const double e = std::exp(theta.theta2 * tau);
  const double half_x2 = 0.5 * x * x;
  std::array<double, 3> g{0.0, 0.0, -tau};
  if (detail::k1_unclamped(t, theta, objective) > k_floor) {
    g[0] = -half_x2 * (1.0 - e);
    g[1] = -half_x2 * (objective.H() - theta.theta1) * tau * e;
  }
  return g;
}

// ---------------------------------------------------------------------------
// Actor
// ---------------------------------------------------------------------------

inline double sample_action(double x, const PolicyParams& phi, Stream& stream) {
  return phi.phi1 * x + std::sqrt(phi.phi2) * stream.standard_normal();
}

// ---------------------------------------------------------------------------
// Updates
// ---------------------------------------------------------------------------

/// Raw update directions of one episode: before the learning rate and before projection.
struct UpdateDirections {
  std::array<double, 3> theta{0.0, 0.0, 0.0};
  double phi1 = 0.0;  ///< phi2 * sum(score_phi1 * bracket); the entropy term has zero phi1-derivative
  double phi2 = 0.0;  ///< sum over the 1/phi2 score; subtracted from phi2

  bool finite() const noexcept {
    return std::isfinite(theta[0]) && std::isfinite(theta[1]) && std::isfinite(theta[2]) && std::isfinite(phi1) &&
           std::isfinite(phi2);
  }
};

inline UpdateDirections update_directions(const Trajectory& traj, const CriticParams& theta, const PolicyParams& phi,
                                          const ObjectiveSpec& objective, double temperature, double k_floor = 1e-4) {
  const double dt = objective.dt();
  const double Q = objective.Q();
  const double entropy_dt = temperature * gaussian_entropy(phi.phi2) * dt;
  const double entropy_grad_dt = temperature * (-0.5 * phi.phi2) * dt;

  UpdateDirections dir;
  double J_now = critic_value(traj.times[0], traj.states[0], theta, objective, k_floor);
  for (std::size_t k = 0; k < traj.steps(); ++k) {
    const double t = traj.times[k];
    const double x = traj.states[k];
    const double J_next = critic_value(traj.times[k + 1], traj.states[k + 1], theta, objective, k_floor);
    const double bracket = J_next - J_now - 0.5 * Q * x * x * dt + entropy_dt;

    const auto g = critic_grad(t, x, theta, objective, k_floor);
    for (std::size_t i = 0; i < 3; ++i) dir.theta[i] += g[i] * bracket;

    const double residual = traj.actions[k] - phi.phi1 * x;
    // score wrt phi1 is residual * x / phi2; the phi2 prefactor cancels it
    dir.phi1 += residual * x * bracket;
    dir.phi2 += (0.5 * phi.phi2 - 0.5 * residual * residual) * bracket + entropy_grad_dt;

    J_now = J_next;
  }
  return dir;
}

inline CriticParams apply_theta(const CriticParams& theta, const UpdateDirections& dir, double step,
                                const ProjectionBounds& bounds) {
  auto v = theta.as_array();
  for (std::size_t i = 0; i < 3; ++i) v[i] += step * dir.theta[i];
  return CriticParams::from_array(project_ball(v, bounds.U_theta));
}

inline double apply_phi1(const PolicyParams& phi, const UpdateDirections& dir, double step,
                         const ProjectionBounds& bounds) {
  return project_interval(phi.phi1 + step * dir.phi1, -bounds.U1, bounds.U1);
}

inline double apply_phi2(const PolicyParams& phi, const UpdateDirections& dir, double step,
                         const ProjectionBounds& bounds) {
  return project_interval(phi.phi2 - step * dir.phi2, bounds.epsilon, bounds.U2);
}

/// Step size and temperature of the state's current episode.
struct StepControls {
  double step;
  double temperature;

  static StepControls of(const LearnerState& s) {
    return {learning_rate(s.episode, s.config.schedules.lr_exponent), gamma_schedule(s.episode, s.config.schedules)};
  }
};

inline CriticParams update_theta(const Trajectory& traj, const LearnerState& state, const ObjectiveSpec& objective,
                                 StepControls ctl) {
  const auto dir = update_directions(traj, state.critic, state.policy, objective, ctl.temperature,
                                     state.config.k_floor);
  return apply_theta(state.critic, dir, ctl.step, state.config.bounds);
}

inline CriticParams update_theta(const Trajectory& traj, const LearnerState& state, const ObjectiveSpec& objective) {
  return update_theta(traj, state, objective, StepControls::of(state));
}

inline double update_phi1(const Trajectory& traj, const LearnerState& state, const ObjectiveSpec& objective,
                          StepControls ctl) {
  const auto dir = update_directions(traj, state.critic, state.policy, objective, ctl.temperature,
                                     state.config.k_floor);
  return apply_phi1(state.policy, dir, ctl.step, state.config.bounds);
}

inline double update_phi1(const Trajectory& traj, const LearnerState& state, const ObjectiveSpec& objective) {
  return update_phi1(traj, state, objective, StepControls::of(state));
}

inline double update_phi2(const Trajectory& traj, const LearnerState& state, const ObjectiveSpec& objective,
                          StepControls ctl) {
  const auto dir = update_directions(traj, state.critic, state.policy, objective, ctl.temperature,
                                     state.config.k_floor);
  return apply_phi2(state.policy, dir, ctl.step, state.config.bounds);
}

inline double update_phi2(const Trajectory& traj, const LearnerState& state, const ObjectiveSpec& objective) {
  return update_phi2(traj, state, objective, StepControls::of(state));
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

/// theta ~ N(0, I) with |theta1|, phi1 ~ N(0, 1), phi2 = phi2_init; all projected.
inline LearnerState initial_learner_state(const LearnerConfig& config, Stream& init) {
  LearnerState s;
  s.config = config;
  std::array<double, 3> th{std::abs(init.standard_normal()), init.standard_normal(), init.standard_normal()};
  s.critic = CriticParams::from_array(project_ball(th, config.bounds.U_theta));
  s.policy.phi1 = project_interval(init.standard_normal(), -config.bounds.U1, config.bounds.U1);
  s.policy.phi2 = project_interval(config.phi2_init, config.bounds.epsilon, config.bounds.U2);
  return s;
}

/**
 * Runs one training episode and applies the simultaneous update. Diverged
 * episodes and non-finite directions leave the parameters untouched; the
 * episode counter advances either way.
 */
inline const Trajectory& train_episode(LearnerState& state, const MarketModel& model, const ObjectiveSpec& objective,
                                       Stream& env, Stream& actions, Trajectory& traj) {
  const PolicyParams phi = state.policy;
  traj = simulate_episode(
      model, objective, [&](double, double x) { return sample_action(x, phi, actions); }, env);
  state.rewards.push_back(episode_reward(traj, objective));

  if (!traj.diverged) {
    const auto ctl = StepControls::of(state);
    const auto dir = update_directions(traj, state.critic, state.policy, objective, ctl.temperature,
                                       state.config.k_floor);
    if (dir.finite()) {
      const auto& b = state.config.bounds;
      const CriticParams theta = apply_theta(state.critic, dir, ctl.step, b);
      const double phi1 = apply_phi1(state.policy, dir, ctl.step, b);
      const double phi2 = apply_phi2(state.policy, dir, ctl.step, b);
      state.critic = theta;
      state.policy = {phi1, phi2};
    }
  }
  ++state.episode;
  return traj;
}

struct TrainSummary {
  LearnerState state;
  std::size_t diverged_episodes = 0;
};

inline TrainSummary train(const MarketModel& model, const ObjectiveSpec& objective, LearnerState initial,
                          std::size_t episodes, const EnvironmentNoise& noise, Stream& actions) {
  TrainSummary out{std::move(initial), 0};
  out.state.rewards.reserve(out.state.rewards.size() + episodes);
  Trajectory traj;
  for (std::size_t i = 0; i < episodes; ++i) {
    Stream env = noise.episode(i);
    train_episode(out.state, model, objective, env, actions, traj);
    if (traj.diverged) ++out.diverged_episodes;
  }
  return out;
}

}  // namespace almrl
