/**
 * @file baselines.hpp
 * @brief Comparison strategies: dynamic CPPI, adaptive contingent strategy
 *        (ACS), and the model-based plug-in (MBP) estimator.
 */
#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "almrl/actor_critic.hpp"
#include "almrl/market.hpp"
#include "almrl/rng.hpp"

namespace almrl {

enum class BaselineKind { DCPPI, ACS, MBP };

constexpr double sgn(double v) noexcept { return static_cast<double>((v > 0.0) - (v < 0.0)); }

// ---------------------------------------------------------------------------
// DCPPI / ACS
// ---------------------------------------------------------------------------

struct MultiplierState {
  double m = 0.0;
  std::size_t episode = 0;
};

struct AcsConfig {
  double delta = 0.1;
};

constexpr double dcppi_control(double m, double x) noexcept { return -m * x; }

/// Deadband control: inaction while |x| <= delta.
inline double acs_control(double m, const AcsConfig& config, double x) noexcept {
  return -m * sgn(x) * std::max(std::abs(x) - config.delta, 0.0);
}

/// m + a * sgn(sum_i sgn(x_i x_{i+1})) over consecutive states.
inline double multiplier_update(double m, std::span<const double> states, double step) {
  if (states.size() < 2) throw std::invalid_argument("multiplier_update: need at least two states");
  double votes = 0.0;
  for (std::size_t i = 0; i + 1 < states.size(); ++i) votes += sgn(states[i] * states[i + 1]);
  return m + step * sgn(votes);
}

// ---------------------------------------------------------------------------
// MBP estimation
// ---------------------------------------------------------------------------

class IdentificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TransitionSample {
  double x;
  double u;
  double dx;
};

struct ResidualSample {
  double x;
  double u;
  double residual;
};

struct DriftEstimate {
  double A_hat = 0.0;
  double B_hat = 0.0;
};

struct DiffusionEstimate {
  double C_hat = 0.0;
  double D_hat = 0.0;
  double d2_raw = 0.0;        ///< fitted coefficient of u^2 before the floor
  bool floor_engaged = false;  ///< d2_raw <= d_floor^2
};

struct MbpEstimates {
  double A_hat = 0.0;
  double B_hat = 0.0;
  double C_hat = 0.0;
  double D_hat = 1.0;
  std::size_t sample_count = 0;
};

namespace detail {

inline constexpr double kRankTolerance = 1e-12;

template <int N>
Eigen::Matrix<double, N, 1> solve_normal_equations(const Eigen::Matrix<double, N, N>& gram,
                                                   const Eigen::Matrix<double, N, 1>& rhs, const char* what) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, N, N>> eig(gram, Eigen::EigenvaluesOnly);
  const auto& ev = eig.eigenvalues();
  if (!(ev.maxCoeff() > 0.0) || ev.minCoeff() <= kRankTolerance * ev.maxCoeff()) {
    throw IdentificationError(std::string(what) + ": rank-deficient design");
  }
  return gram.ldlt().solve(rhs);
}

inline DiffusionEstimate recover_diffusion(double cd, double d2, double d_floor) {
  DiffusionEstimate out;
  out.d2_raw = d2;
  out.floor_engaged = !(d2 > d_floor * d_floor);
  out.D_hat = std::sqrt(out.floor_engaged ? d_floor * d_floor : d2);
  out.C_hat = cd / out.D_hat;
  return out;
}

}  // namespace detail

/// OLS of dx/dt on (x, u), no intercept.
inline DriftEstimate mbp_fit_drift(std::span<const TransitionSample> samples, double dt) {
  if (samples.size() < 2) throw IdentificationError("mbp_fit_drift: need at least two samples");
  Eigen::Matrix2d gram = Eigen::Matrix2d::Zero();
  Eigen::Vector2d rhs = Eigen::Vector2d::Zero();
  for (const auto& s : samples) {
    const Eigen::Vector2d r(s.x, s.u);
    gram.noalias() += r * r.transpose();
    rhs.noalias() += r * (s.dx / dt);
  }
  const auto beta = detail::solve_normal_equations<2>(gram, rhs, "mbp_fit_drift");
  return {beta(0), beta(1)};
}

/**
 * Least squares of residual^2/dt on (x^2, 2xu, u^2), giving (C^2, CD, D^2).
 * D_hat = sqrt(max(D^2, d_floor^2)) and C_hat = CD / D_hat; the positive root
 * is taken because C and D are positive in every generated scenario.
 */
inline DiffusionEstimate mbp_fit_diffusion(std::span<const ResidualSample> samples, double dt,
                                           double d_floor = 0.01) {
  if (samples.size() < 3) throw IdentificationError("mbp_fit_diffusion: need at least three samples");
  Eigen::Matrix3d gram = Eigen::Matrix3d::Zero();
  Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
  for (const auto& s : samples) {
    const Eigen::Vector3d r(s.x * s.x, 2.0 * s.x * s.u, s.u * s.u);
    gram.noalias() += r * r.transpose();
    rhs.noalias() += r * (s.residual * s.residual / dt);
  }
  const auto c = detail::solve_normal_equations<3>(gram, rhs, "mbp_fit_diffusion");
  return detail::recover_diffusion(c(1), c(2), d_floor);
}

/// Plug-in of the classical optimal gain.
inline double mbp_policy_gain(const MbpEstimates& est) {
  return -(est.B_hat + est.C_hat * est.D_hat) / (est.D_hat * est.D_hat);
}

/**
 * Running moment sums of (x, u, dx), enough to refit both regressions on all
 * samples seen so far in O(1). Residuals of the diffusion fit are expanded
 * in terms of the moments, so refitting after the drift estimate changes
 * needs no stored samples.
 */
class MbpAccumulator {
 public:
  void add(double x, double u, double dx) {
    double xp = 1.0;
    for (int a = 0; a <= 4; ++a) {
      double up = 1.0;
      for (int b = 0; a + b <= 4; ++b) {
        const double mono = xp * up;
        s_[a][b] += mono;
        if (a + b <= 3) sdx_[a][b] += mono * dx;
        if (a + b <= 2) sdx2_[a][b] += mono * dx * dx;
        up *= u;
      }
      xp *= x;
    }
    ++count_;
  }

  std::size_t count() const noexcept { return count_; }

  DriftEstimate fit_drift(double dt) const {
    if (count_ < 2) throw IdentificationError("mbp_fit_drift: need at least two samples");
    Eigen::Matrix2d gram;
    gram << s_[2][0], s_[1][1], s_[1][1], s_[0][2];
    const Eigen::Vector2d rhs(sdx_[1][0] / dt, sdx_[0][1] / dt);
    const auto beta = detail::solve_normal_equations<2>(gram, rhs, "mbp_fit_drift");
    return {beta(0), beta(1)};
  }

  DiffusionEstimate fit_diffusion(double dt, const DriftEstimate& drift, double d_floor = 0.01) const {
    if (count_ < 3) throw IdentificationError("mbp_fit_diffusion: need at least three samples");
    // Regressors as monomial exponents (x^a u^b) with scale factors.
    struct Reg {
      int a, b;
      double scale;
    };
    constexpr Reg regs[3] = {{2, 0, 1.0}, {1, 1, 2.0}, {0, 2, 1.0}};
    const double A = drift.A_hat, B = drift.B_hat;
    Eigen::Matrix3d gram;
    Eigen::Vector3d rhs;
    for (int i = 0; i < 3; ++i) {
      const auto [a, b, si] = regs[i];
      for (int j = 0; j < 3; ++j) {
        gram(i, j) = si * regs[j].scale * s_[a + regs[j].a][b + regs[j].b];
      }
      // sum g * (dx - dt(Ax + Bu))^2 / dt
      const double dx2 = sdx2_[a][b];
      const double cross = A * sdx_[a + 1][b] + B * sdx_[a][b + 1];
      const double drift2 = A * A * s_[a + 2][b] + 2.0 * A * B * s_[a + 1][b + 1] + B * B * s_[a][b + 2];
      rhs(i) = si * (dx2 / dt - 2.0 * cross + dt * drift2);
    }
    const auto c = detail::solve_normal_equations<3>(gram, rhs, "mbp_fit_diffusion");
    return detail::recover_diffusion(c(1), c(2), d_floor);
  }

 private:
  double s_[5][5]{};
  double sdx_[5][5]{};
  double sdx2_[5][5]{};
  std::size_t count_ = 0;
};

// ---------------------------------------------------------------------------
// Episode loops
// ---------------------------------------------------------------------------

struct BaselineConfig {
  AcsConfig acs;
  double sigma_e = 0.1;       ///< MBP excitation standard deviation
  double d_floor = 0.01;      ///< MBP floor on D_hat
  std::size_t refit_every = 1;  ///< MBP refit cadence in episodes
  double lr_exponent = 0.75;  ///< multiplier step a(n) = (n+1)^-lr_exponent
};

struct BaselineRun {
  std::vector<double> rewards;
  std::vector<std::pair<std::string, double>> params;
  std::size_t diverged_episodes = 0;
};

namespace detail {

inline BaselineRun run_multiplier(BaselineKind kind, const MarketModel& model, const ObjectiveSpec& objective,
                                  std::size_t episodes, const EnvironmentNoise& noise, Stream& method,
                                  const BaselineConfig& config) {
  BaselineRun run;
  run.rewards.reserve(episodes);
  MultiplierState st{method.standard_normal(), 0};
  for (std::size_t n = 0; n < episodes; ++n) {
    Stream env = noise.episode(n);
    const double m = st.m;
    const auto traj =
        kind == BaselineKind::DCPPI
            ? simulate_episode(model, objective, [m](double, double x) { return dcppi_control(m, x); }, env)
            : simulate_episode(
                  model, objective, [m, &config](double, double x) { return acs_control(m, config.acs, x); }, env);
    run.rewards.push_back(episode_reward(traj, objective));
    if (traj.diverged) ++run.diverged_episodes;
    st.m = multiplier_update(st.m, traj.states, learning_rate(n, config.lr_exponent));
    ++st.episode;
  }
  run.params = {{"m", st.m}};
  return run;
}

inline BaselineRun run_mbp(const MarketModel& model, const ObjectiveSpec& objective, std::size_t episodes,
                           const EnvironmentNoise& noise, Stream& method, const BaselineConfig& config) {
  BaselineRun run;
  run.rewards.reserve(episodes);
  MbpAccumulator acc;
  MbpEstimates est;
  bool fitted = false;
  std::size_t failed_fits = 0;
  double gain = 0.0;
  const double dt = objective.dt();
  const std::size_t cadence = config.refit_every == 0 ? 1 : config.refit_every;

  for (std::size_t n = 0; n < episodes; ++n) {
    Stream env = noise.episode(n);
    const double g = gain;
    const auto traj = simulate_episode(
        model, objective, [&](double, double x) { return g * x + config.sigma_e * method.standard_normal(); }, env);
    run.rewards.push_back(episode_reward(traj, objective));
    if (traj.diverged) {
      // Back to pure excitation; the diverged path is not added to the fit.
      ++run.diverged_episodes;
      gain = 0.0;
      continue;
    }
    for (std::size_t k = 0; k < traj.steps(); ++k) {
      acc.add(traj.states[k], traj.actions[k], traj.states[k + 1] - traj.states[k]);
    }
    if ((n + 1) % cadence != 0) continue;
    try {
      const auto drift = acc.fit_drift(dt);
      const auto diff = acc.fit_diffusion(dt, drift, config.d_floor);
      if (diff.floor_engaged) throw IdentificationError("mbp: D_hat at floor");
      est = {drift.A_hat, drift.B_hat, diff.C_hat, diff.D_hat, acc.count()};
      gain = mbp_policy_gain(est);
      fitted = true;
    } catch (const IdentificationError&) {
      ++failed_fits;
    }
  }
  run.params = {{"A_hat", est.A_hat}, {"B_hat", est.B_hat}, {"C_hat", est.C_hat}, {"D_hat", est.D_hat},
                {"gain", gain},       {"fitted", fitted ? 1.0 : 0.0},
                {"failed_fits", static_cast<double>(failed_fits)}};
  return run;
}

}  // namespace detail

/// Runs `episodes` episodes of a baseline. Multiplier strategies start from
/// m ~ N(0, 1) drawn from `method`; MBP draws its excitation from `method`.
inline BaselineRun run_baseline(BaselineKind kind, const MarketModel& model, const ObjectiveSpec& objective,
                                std::size_t episodes, const EnvironmentNoise& noise, Stream& method,
                                const BaselineConfig& config = {}) {
  switch (kind) {
    case BaselineKind::DCPPI:
    case BaselineKind::ACS:
      return detail::run_multiplier(kind, model, objective, episodes, noise, method, config);
    case BaselineKind::MBP:
      return detail::run_mbp(model, objective, episodes, noise, method, config);
  }
  throw std::invalid_argument("run_baseline: unknown strategy");
}

}  // namespace almrl
