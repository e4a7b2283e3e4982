/**
 * @file stats.hpp
 * @brief Reward-curve summaries and the one-sided Wilcoxon signed-rank test.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace almrl {

/// Trailing mean over min(k+1, window) values; output length equals input length.
inline std::vector<double> moving_average(std::span<const double> series, std::size_t window) {
  if (window == 0) throw std::invalid_argument("moving_average: window must be >= 1");
  std::vector<double> out(series.size());
  for (std::size_t k = 0; k < series.size(); ++k) {
    const std::size_t first = k + 1 >= window ? k + 1 - window : 0;
    const std::size_t len = k + 1 - first;
    // Deviations from the current value keep constant stretches exact.
    const double ref = series[k];
    double dev = 0.0;
    for (std::size_t i = first; i <= k; ++i) dev += series[i] - ref;
    out[k] = ref + dev / static_cast<double>(len);
  }
  return out;
}

/// Linear-interpolation quantile at position (n-1) q of the sorted values.
inline double quantile(std::span<const double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile: empty input");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile: q must lie in [0, 1]");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double pos = static_cast<double>(v.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  if (lo + 1 >= v.size()) return v.back();
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[lo + 1] - v[lo]);
}

struct TerminalReward {
  double value = 0.0;
  bool truncated = false;  ///< fewer values than the requested tail
};

inline TerminalReward terminal_reward(std::span<const double> series, std::size_t tail = 500) {
  if (series.empty()) throw std::invalid_argument("terminal_reward: empty series");
  const std::size_t n = std::min(tail, series.size());
  const auto last = series.last(n);
  return {std::accumulate(last.begin(), last.end(), 0.0) / static_cast<double>(n), n < tail};
}

struct CurveSummary {
  std::vector<double> mean;
  std::vector<double> smoothed;
  std::vector<double> q25;
  std::vector<double> q75;
};

/// Per-episode statistics across runs of equal length.
inline CurveSummary summarize_curves(const std::vector<std::vector<double>>& runs, std::size_t window = 200) {
  CurveSummary out;
  if (runs.empty()) return out;
  const std::size_t len = runs.front().size();
  for (const auto& r : runs) {
    if (r.size() != len) throw std::invalid_argument("summarize_curves: runs differ in length");
  }
  out.mean.resize(len);
  out.q25.resize(len);
  out.q75.resize(len);
  std::vector<double> column(runs.size());
  for (std::size_t e = 0; e < len; ++e) {
    double sum = 0.0;
    for (std::size_t r = 0; r < runs.size(); ++r) {
      column[r] = runs[r][e];
      sum += column[r];
    }
    out.mean[e] = sum / static_cast<double>(runs.size());
    out.q25[e] = quantile(column, 0.25);
    out.q75[e] = quantile(column, 0.75);
  }
  out.smoothed = moving_average(out.mean, window);
  return out;
}

// ---------------------------------------------------------------------------
// Wilcoxon signed-rank test, alternative "a > b"
// ---------------------------------------------------------------------------

enum class WilcoxonMethod { Auto, Exact, Normal };

struct SignedRanks {
  std::vector<double> ranks;          ///< average ranks of |d| over the nonzero differences
  std::vector<bool> positive;         ///< sign of each nonzero difference
  std::vector<std::size_t> tie_sizes; ///< sizes of tie groups (only groups > 1)
  double w_plus = 0.0;

  std::size_t size() const noexcept { return ranks.size(); }
};

/// Drops zero differences and ranks |a - b| with average ranks for ties.
inline SignedRanks signed_ranks(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("wilcoxon: samples differ in length");
  std::vector<double> d;
  d.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    if (diff != 0.0) d.push_back(diff);
  }
  SignedRanks out;
  const std::size_t m = d.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return std::abs(d[i]) < std::abs(d[j]); });
  out.ranks.assign(m, 0.0);
  out.positive.assign(m, false);
  for (std::size_t i = 0; i < m;) {
    std::size_t j = i;
    while (j + 1 < m && std::abs(d[order[j + 1]]) == std::abs(d[order[i]])) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) out.ranks[order[k]] = avg;
    if (j > i) out.tie_sizes.push_back(j - i + 1);
    i = j + 1;
  }
  for (std::size_t i = 0; i < m; ++i) {
    out.positive[i] = d[i] > 0.0;
    if (out.positive[i]) out.w_plus += out.ranks[i];
  }
  return out;
}

/**
 * Exact upper-tail probability P(W+ >= observed) under the null that each
 * sign is +/- with probability 1/2 independently. Counts the 2^m sign
 * assignments by rank sum; ranks are doubled so tied (half-integer) ranks
 * stay integral.
 */
inline double wilcoxon_exact_p(const SignedRanks& sr) {
  const std::size_t m = sr.size();
  if (m == 0) return 1.0;
  std::vector<std::int64_t> doubled(m);
  std::int64_t total = 0;
  for (std::size_t i = 0; i < m; ++i) {
    doubled[i] = std::llround(2.0 * sr.ranks[i]);
    total += doubled[i];
  }
  // counts[s] = number of subsets whose doubled rank sum is s
  std::vector<double> counts(static_cast<std::size_t>(total) + 1, 0.0);
  counts[0] = 1.0;
  std::int64_t reach = 0;
  for (std::int64_t r : doubled) {
    for (std::int64_t s = reach; s >= 0; --s) {
      if (counts[s] != 0.0) counts[s + r] += counts[s];
    }
    reach += r;
  }
  const std::int64_t observed = std::llround(2.0 * sr.w_plus);
  double tail = 0.0;
  for (std::int64_t s = observed; s <= total; ++s) tail += counts[s];
  return std::min(1.0, tail / std::ldexp(1.0, static_cast<int>(m)));
}

/// Normal approximation with tie-corrected variance and 0.5 continuity correction.
inline double wilcoxon_normal_p(const SignedRanks& sr) {
  const double m = static_cast<double>(sr.size());
  if (sr.size() == 0) return 1.0;
  const double mean = m * (m + 1.0) / 4.0;
  double var = m * (m + 1.0) * (2.0 * m + 1.0) / 24.0;
  for (std::size_t t : sr.tie_sizes) {
    const double tt = static_cast<double>(t);
    var -= (tt * tt * tt - tt) / 48.0;
  }
  if (!(var > 0.0)) return sr.w_plus > mean ? 0.0 : 1.0;
  const double z = (sr.w_plus - mean - 0.5) / std::sqrt(var);
  return std::clamp(0.5 * std::erfc(z / std::sqrt(2.0)), 0.0, 1.0);
}

inline constexpr std::size_t kWilcoxonExactLimit = 20;

/// One-sided p-value for "a does not exceed b" against "a > b".
inline double wilcoxon_one_sided(std::span<const double> a, std::span<const double> b,
                                 WilcoxonMethod method = WilcoxonMethod::Auto) {
  const auto sr = signed_ranks(a, b);
  if (sr.size() == 0) return 1.0;
  switch (method) {
    case WilcoxonMethod::Exact:
      return wilcoxon_exact_p(sr);
    case WilcoxonMethod::Normal:
      return wilcoxon_normal_p(sr);
    case WilcoxonMethod::Auto:
      break;
  }
  return sr.size() <= kWilcoxonExactLimit ? wilcoxon_exact_p(sr) : wilcoxon_normal_p(sr);
}

struct PValueMatrix {
  std::vector<std::string> methods;
  std::vector<std::vector<double>> p;  ///< p[i][j]: row i does not outperform column j
};

inline PValueMatrix pvalue_matrix(const std::vector<std::string>& methods,
                                  const std::vector<std::vector<double>>& terminal) {
  if (methods.size() != terminal.size()) throw std::invalid_argument("pvalue_matrix: method/sample count mismatch");
  PValueMatrix out{methods, std::vector<std::vector<double>>(methods.size(), std::vector<double>(methods.size(), 1.0))};
  for (std::size_t i = 0; i < methods.size(); ++i) {
    for (std::size_t j = 0; j < methods.size(); ++j) {
      if (i != j) out.p[i][j] = wilcoxon_one_sided(terminal[i], terminal[j]);
    }
  }
  return out;
}

}  // namespace almrl
