#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "sdehmc/sampler.hpp"

namespace sdehmc {

struct ParameterSummary {
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double q25 = 0.0;
  double q50 = 0.0;
  double q75 = 0.0;
  double q975 = 0.0;
  double ess = 0.0;

  double ci_low() const { return q025; }
  double ci_high() const { return q975; }
  bool covers(double x) const { return q025 <= x && x <= q975; }
};

struct PosteriorSummary {
  ParameterSummary beta;
  ParameterSummary gamma;
  ParameterSummary K;
  double acceptance_rate = 0.0;
  std::size_t retained = 0;
  std::size_t chains = 0;
};

/// Inverse of the empirical CDF, averaging across jumps (R type 2). Depends
/// on the sample only through its ECDF, so pooling copies of one chain
/// leaves every quantile unchanged. Sorted input.
inline double quantile_sorted(std::span<const double> sorted, double prob) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty series");
  const std::size_t n = sorted.size();
  if (prob <= 0.0) return sorted.front();
  if (prob >= 1.0) return sorted.back();
  const double m = static_cast<double>(n) * prob;
  const double whole = std::round(m);
  if (std::abs(m - whole) <= 1e-9 * std::max(1.0, m)) {
    const auto k = static_cast<std::size_t>(whole);  // 1-based jump position
    if (k == 0) return sorted.front();
    if (k >= n) return sorted.back();
    return 0.5 * (sorted[k - 1] + sorted[k]);
  }
  const auto k = static_cast<std::size_t>(std::ceil(m));
  return sorted[std::min(k, n) - 1];
}

inline double mean_of(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

inline double sd_of(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double m = mean_of(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

/// Effective sample size with Geyer's initial monotone positive sequence:
/// pair sums Gamma_k = rho_{2k} + rho_{2k+1} are accumulated while positive
/// and non-increasing. Clipped to the series length; a constant series has
/// ESS 1. Series shorter than 10 are returned as is.
inline double ess(std::span<const double> x) {
  const std::size_t L = x.size();
  if (L < 10) return static_cast<double>(L);
  const double m = mean_of(x);
  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t t = 0; t + lag < L; ++t) s += (x[t] - m) * (x[t + lag] - m);
    return s / static_cast<double>(L);
  };
  const double c0 = autocov(0);
  if (!(c0 > 0.0)) return 1.0;

  double sum = 0.0;
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; 2 * k + 1 < L; ++k) {
    double pair = (autocov(2 * k) + autocov(2 * k + 1)) / c0;
    if (!(pair > 0.0)) break;
    pair = std::min(pair, prev);
    sum += pair;
    prev = pair;
  }
  const double tau = -1.0 + 2.0 * sum;
  const double n = static_cast<double>(L);
  if (!(tau > 1.0 / n)) return n;
  return std::min(n, n / tau);
}

inline ParameterSummary summarize_series(std::vector<double> values, double ess_value) {
  if (values.empty()) throw std::invalid_argument("summarize: no retained samples");
  ParameterSummary s;
  s.mean = mean_of(values);
  s.sd = sd_of(values);
  std::sort(values.begin(), values.end());
  s.q025 = quantile_sorted(values, 0.025);
  s.q25 = quantile_sorted(values, 0.25);
  s.q50 = quantile_sorted(values, 0.5);
  s.q75 = quantile_sorted(values, 0.75);
  s.q975 = quantile_sorted(values, 0.975);
  s.ess = ess_value;
  return s;
}

inline std::size_t discard_count(std::size_t rows, double discard) {
  if (!(discard >= 0.0) || !(discard < 1.0)) {
    throw std::invalid_argument("discard fraction must lie in [0, 1)");
  }
  return static_cast<std::size_t>(std::floor(discard * static_cast<double>(rows)));
}

/// Pools the retained rows of every chain. ESS is summed over chains.
inline PosteriorSummary summarize(std::span<const ChainRecord> records, double discard = 0.0) {
  std::vector<double> beta, gamma, K;
  double ess_beta = 0.0, ess_gamma = 0.0, ess_K = 0.0;
  std::size_t accepted = 0;
  for (const auto& rec : records) {
    const std::size_t skip = discard_count(rec.rows.size(), discard);
    std::vector<double> b, g, k;
    for (std::size_t i = skip; i < rec.rows.size(); ++i) {
      const auto& row = rec.rows[i];
      b.push_back(row.beta);
      g.push_back(row.gamma);
      k.push_back(row.K);
      accepted += row.accepted ? 1 : 0;
    }
    if (b.empty()) continue;
    ess_beta += ess(b);
    ess_gamma += ess(g);
    ess_K += ess(k);
    beta.insert(beta.end(), b.begin(), b.end());
    gamma.insert(gamma.end(), g.begin(), g.end());
    K.insert(K.end(), k.begin(), k.end());
  }
  if (beta.empty()) throw std::invalid_argument("summarize: no rows retained after discard");
  PosteriorSummary out;
  out.retained = beta.size();
  out.chains = records.size();
  out.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(out.retained);
  out.beta = summarize_series(std::move(beta), ess_beta);
  out.gamma = summarize_series(std::move(gamma), ess_gamma);
  out.K = summarize_series(std::move(K), ess_K);
  return out;
}

inline PosteriorSummary summarize(const ChainRecord& record, double discard = 0.0) {
  return summarize(std::span<const ChainRecord>(&record, 1), discard);
}

/// 0.9 min(sd, IQR/1.34) n^{-1/5}.
inline double silverman_bandwidth(std::span<const double> x) {
  if (x.size() < 2) throw std::invalid_argument("kde: need at least 2 samples");
  const double sd = sd_of(x);
  if (!(sd > 0.0)) {
    throw std::invalid_argument("kde: series has zero variance; use a histogram instead");
  }
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  return 0.9 * spread * std::pow(static_cast<double>(x.size()), -0.2);
}

/// Gaussian kernel density estimate evaluated on grid.
inline std::vector<double> kde(std::span<const double> x, std::span<const double> grid,
                               std::optional<double> bandwidth = std::nullopt) {
  const double h = bandwidth ? *bandwidth : silverman_bandwidth(x);
  if (x.size() < 2) throw std::invalid_argument("kde: need at least 2 samples");
  if (!(h > 0.0)) throw std::invalid_argument("kde: bandwidth must be positive");
  const double norm = 1.0 / (static_cast<double>(x.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  std::vector<double> out(grid.size(), 0.0);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double s = 0.0;
    for (double v : x) {
      const double z = (grid[g] - v) / h;
      s += std::exp(-0.5 * z * z);
    }
    out[g] = s * norm;
  }
  return out;
}

/// Evenly spaced points spanning [min - 4h, max + 4h].
inline std::vector<double> kde_grid(std::span<const double> x, double h, std::size_t points = 512) {
  if (x.empty() || points < 2) throw std::invalid_argument("kde_grid: empty series or too few points");
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  const double a = *lo - 4.0 * h;
  const double b = *hi + 4.0 * h;
  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i) {
    grid[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  return grid;
}

}  // namespace sdehmc
