#pragma once

// Reservoir SDE model with multiplicative Stratonovich noise,
//
//   dS/dt = r(t) - (1 + gamma/2) S / K + sqrt(gamma / K) S eta(t),
//
// together with its constant-noise reparametrization
//
//   beta = sqrt(T gamma / K),   S = (T gamma r(t) / beta^2) exp(beta q),
//   dq/dt = beta/(T gamma) exp(-beta q) - rho(t)/T + eta(t)/sqrt(T),
//
// and the log-normal observation model ln y = ln(S/K) + sigma eps.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "sdehmc/layout.hpp"

namespace sdehmc {

struct PhysicalParams {
  double K = 0.0;      // retention time
  double gamma = 0.0;  // noise strength
  double T = 0.0;      // observation window
};

struct DimensionlessParams {
  double beta = 0.0;
  double gamma = 0.0;
};

inline DimensionlessParams to_dimensionless(const PhysicalParams& p) {
  if (!(p.K > 0.0) || !(p.gamma > 0.0) || !(p.T > 0.0)) {
    std::ostringstream msg;
    msg << "to_dimensionless: K, gamma, T must be positive (got K=" << p.K
        << ", gamma=" << p.gamma << ", T=" << p.T << ")";
    throw std::domain_error(msg.str());
  }
  return {std::sqrt(p.T * p.gamma / p.K), p.gamma};
}

/// K = T gamma / beta^2.
inline double retention_time(double beta, double gamma, double T) {
  return T * gamma / (beta * beta);
}

inline PhysicalParams from_dimensionless(const DimensionlessParams& d, double T) {
  if (!(d.beta > 0.0) || !(d.gamma > 0.0) || !(T > 0.0)) {
    throw std::domain_error("from_dimensionless: beta, gamma, T must be positive");
  }
  return {retention_time(d.beta, d.gamma, T), d.gamma, T};
}

// ---------------------------------------------------------------------------
// Input signal

/// r(t) = amplitude * sin^2(omega t) + offset.
struct SinusoidInput {
  double amplitude = 1.0;
  double omega = 0.01;
  double offset = 0.1;
};

/// Piecewise-linear interpolation through (times, values), clamped outside.
struct TabulatedInput {
  std::vector<double> times;
  std::vector<double> values;
};

class InputSignal {
 public:
  InputSignal() = default;
  InputSignal(SinusoidInput s) : kind_(s) {}
  InputSignal(TabulatedInput t) : kind_(std::move(t)) {
    const auto& tab = std::get<TabulatedInput>(kind_);
    if (tab.times.size() < 2 || tab.times.size() != tab.values.size()) {
      throw ValidationError("tabulated input needs >= 2 nodes and matching lengths");
    }
    for (std::size_t i = 0; i < tab.times.size(); ++i) {
      if (i > 0 && !(tab.times[i] > tab.times[i - 1])) {
        throw ValidationError("tabulated input times must be strictly increasing");
      }
      if (!(tab.values[i] > 0.0)) {
        std::ostringstream msg;
        msg << "tabulated input must be strictly positive (node " << i
            << " has r=" << tab.values[i] << ")";
        throw ValidationError(msg.str());
      }
    }
  }

  static InputSignal constant(double r0) { return SinusoidInput{0.0, 0.0, r0}; }

  double operator()(double t) const {
    if (const auto* s = std::get_if<SinusoidInput>(&kind_)) {
      const double sn = std::sin(s->omega * t);
      return s->amplitude * sn * sn + s->offset;
    }
    const auto& tab = std::get<TabulatedInput>(kind_);
    if (t <= tab.times.front()) return tab.values.front();
    if (t >= tab.times.back()) return tab.values.back();
    const auto it = std::upper_bound(tab.times.begin(), tab.times.end(), t);
    const std::size_t hi = static_cast<std::size_t>(it - tab.times.begin());
    const std::size_t lo = hi - 1;
    const double w = (t - tab.times[lo]) / (tab.times[hi] - tab.times[lo]);
    return (1.0 - w) * tab.values[lo] + w * tab.values[hi];
  }

  /// Throws unless r > 0 on all of [0, T]. A tabulated table must also
  /// cover the window.
  void validate(double T) const {
    if (const auto* s = std::get_if<SinusoidInput>(&kind_)) {
      const double lowest = std::min(s->offset, s->offset + s->amplitude);
      if (!(lowest > 0.0)) {
        throw ValidationError("sinusoid input must be strictly positive (offset and offset+amplitude > 0)");
      }
      return;
    }
    const auto& tab = std::get<TabulatedInput>(kind_);
    const double tol = 1e-9 * std::max(1.0, T);
    if (tab.times.front() > tol || tab.times.back() < T - tol) {
      std::ostringstream msg;
      msg << "tabulated input covers [" << tab.times.front() << ", "
          << tab.times.back() << "] but the window is [0, " << T << "]";
      throw ValidationError(msg.str());
    }
  }

  const std::variant<SinusoidInput, TabulatedInput>& kind() const { return kind_; }

 private:
  std::variant<SinusoidInput, TabulatedInput> kind_{SinusoidInput{}};
};

// ---------------------------------------------------------------------------
// Data

struct ObservationModel {
  double sigma = 0.1;
};

/// Observations y_s at equidistant times 0 = t_1 < ... < t_{n+1} = T.
struct TimeSeriesData {
  std::vector<double> times;
  std::vector<double> values;

  std::size_t size() const { return times.size(); }
  double span() const { return times.empty() ? 0.0 : times.back() - times.front(); }

  void validate() const {
    if (times.size() != values.size()) {
      throw ValidationError("time series: times and values differ in length");
    }
    if (times.size() < 2) throw ValidationError("time series: need at least 2 observations");
    const double T = span();
    if (std::abs(times.front()) > 1e-12 * std::max(1.0, T)) {
      throw ValidationError("time series: first observation must be at t = 0");
    }
    const double step = T / static_cast<double>(times.size() - 1);
    for (std::size_t s = 0; s < times.size(); ++s) {
      if (!(values[s] > 0.0) || !std::isfinite(values[s])) {
        std::ostringstream msg;
        msg << "time series: value at row " << s << " must be positive and finite";
        throw ValidationError(msg.str());
      }
      const double expected = static_cast<double>(s) * step;
      if (std::abs(times[s] - expected) > 1e-9 * std::max(1.0, T)) {
        std::ostringstream msg;
        msg << "time series: times must be equidistant (row " << s << " at "
            << times[s] << ", expected " << expected << ")";
        throw ValidationError(msg.str());
      }
    }
  }
};

inline std::vector<double> observation_times(std::size_t n, double T) {
  std::vector<double> t(n + 1);
  for (std::size_t s = 0; s <= n; ++s) t[s] = T * static_cast<double>(s) / static_cast<double>(n);
  t[n] = T;
  return t;
}

// ---------------------------------------------------------------------------
// Path transform

inline double path_transform(double q, double t, const DimensionlessParams& dp,
                             const InputSignal& r, double T) {
  return T * dp.gamma * r(t) / (dp.beta * dp.beta) * std::exp(dp.beta * q);
}

inline double q_from_S(double S, double t, const DimensionlessParams& dp,
                       const InputSignal& r, double T) {
  return std::log(S * dp.beta * dp.beta / (T * dp.gamma * r(t))) / dp.beta;
}

// ---------------------------------------------------------------------------
// Discretized drift

/// L_i = T ln(r(t_i)/r(t_{i-1})) / dt for i = 1..N-1; L_0 = 0 (unused).
/// rho_i = L_i / beta + (2 + gamma) beta / (2 gamma).
inline std::vector<double> log_rate_terms(const InputSignal& r, const LatticeLayout& layout) {
  std::vector<double> L(layout.N, 0.0);
  double prev = r(0.0);
  if (!(prev > 0.0)) throw std::domain_error("rho_discrete: r(0) must be positive");
  for (std::size_t i = 1; i < layout.N; ++i) {
    const double cur = r(layout.time(i));
    if (!(cur > 0.0) || !std::isfinite(cur)) {
      std::ostringstream msg;
      msg << "rho_discrete: r(t) non-positive at grid point " << i;
      throw std::domain_error(msg.str());
    }
    L[i] = layout.T * std::log(cur / prev) / layout.dt;
    prev = cur;
  }
  return L;
}

/// rho[i], rho_dot[i] on bead i (0-based). rho[0] is unused and zero;
/// rho_dot[0] = rho_dot[1] = 0 because there is no rho before bead 1.
struct RhoSequence {
  std::vector<double> rho;
  std::vector<double> rho_dot;
};

inline double rho_constant(double beta, double gamma) {
  return (2.0 + gamma) * beta / (2.0 * gamma);
}

inline RhoSequence rho_discrete(const InputSignal& r, const DimensionlessParams& dp,
                                const LatticeLayout& layout) {
  const auto L = log_rate_terms(r, layout);
  RhoSequence out{std::vector<double>(layout.N, 0.0), std::vector<double>(layout.N, 0.0)};
  const double c = rho_constant(dp.beta, dp.gamma);
  for (std::size_t i = 1; i < layout.N; ++i) out.rho[i] = L[i] / dp.beta + c;
  for (std::size_t i = 2; i < layout.N; ++i) {
    out.rho_dot[i] = (out.rho[i] - out.rho[i - 1]) / layout.dt;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Equilibrium law under constant input r0:
// inverse gamma with shape (2+gamma)/gamma and scale 2 K r0 / gamma.

class InverseGammaLaw {
 public:
  InverseGammaLaw(double shape, double scale) : shape_(shape), scale_(scale) {
    if (!(shape > 0.0) || !(scale > 0.0)) {
      throw std::domain_error("inverse gamma: shape and scale must be positive");
    }
  }

  double shape() const { return shape_; }
  double scale() const { return scale_; }

  double unnormalized_pdf(double S) const {
    if (!(S > 0.0)) return 0.0;
    return std::pow(S, -shape_ - 1.0) * std::exp(-scale_ / S);
  }

  double pdf(double S) const {
    if (!(S > 0.0)) return 0.0;
    return std::exp(shape_ * std::log(scale_) - std::lgamma(shape_) -
                    (shape_ + 1.0) * std::log(S) - scale_ / S);
  }

  double cdf(double S) const {
    if (!(S > 0.0)) return 0.0;
    return boost::math::gamma_q(shape_, scale_ / S);
  }

  /// Finite for shape > 1.
  double mean() const {
    return shape_ > 1.0 ? scale_ / (shape_ - 1.0) : std::numeric_limits<double>::infinity();
  }

  /// nullopt when the variance diverges (shape <= 2, i.e. gamma >= 2).
  std::optional<double> variance() const {
    if (shape_ <= 2.0) return std::nullopt;
    const double m = scale_ / (shape_ - 1.0);
    return m * m / (shape_ - 2.0);
  }

 private:
  double shape_;
  double scale_;
};

inline InverseGammaLaw equilibrium_law(const PhysicalParams& p, double r0) {
  if (!(p.K > 0.0) || !(p.gamma > 0.0) || !(r0 > 0.0)) {
    throw std::domain_error("equilibrium_law: K, gamma, r0 must be positive");
  }
  return {(2.0 + p.gamma) / p.gamma, 2.0 * p.K * r0 / p.gamma};
}

/// Un-normalized S^{-2(1+gamma)/gamma} exp(-2 K r0 / (gamma S)).
inline double equilibrium_pdf(double S, const PhysicalParams& p, double r0) {
  return equilibrium_law(p, r0).unnormalized_pdf(S);
}

// ---------------------------------------------------------------------------
// Forward simulation

struct SimulationGrid {
  std::size_t steps = 0;          // Euler-Maruyama steps over [0, T]
  std::size_t record_stride = 1;  // keep every stride-th point
};

struct TruthPath {
  std::vector<double> t;
  std::vector<double> S;
  std::vector<double> q;
  PhysicalParams params;
};

/// Euler-Maruyama on the additive-noise q-form, mapped back to S. The
/// ln r(t) drift contribution is integrated exactly over each step.
/// S0 defaults to K r(0).
template <class Rng>
TruthPath simulate_truth(const PhysicalParams& params, const InputSignal& r,
                         const SimulationGrid& grid, std::optional<double> S0, Rng& rng) {
  if (grid.steps == 0 || grid.record_stride == 0) {
    throw ValidationError("simulate_truth: steps and record_stride must be positive");
  }
  r.validate(params.T);
  const auto dp = to_dimensionless(params);
  const double T = params.T;
  const double h = T / static_cast<double>(grid.steps);
  const double start = S0.value_or(params.K * r(0.0));
  if (!(start > 0.0)) throw ValidationError("simulate_truth: S0 must be positive");

  const double beta = dp.beta;
  const double gamma = dp.gamma;
  const double push = beta / (T * gamma);
  const double pull = rho_constant(beta, gamma) / T;
  const double noise = std::sqrt(h / T);
  std::normal_distribution<double> normal(0.0, 1.0);

  TruthPath path;
  path.params = params;
  const std::size_t kept = grid.steps / grid.record_stride + 1;
  path.t.reserve(kept);
  path.S.reserve(kept);
  path.q.reserve(kept);

  double q = q_from_S(start, 0.0, dp, r, T);
  double log_r = std::log(r(0.0));
  auto record = [&](double t) {
    path.t.push_back(t);
    path.q.push_back(q);
    path.S.push_back(path_transform(q, t, dp, r, T));
  };
  record(0.0);
  for (std::size_t k = 0; k < grid.steps; ++k) {
    const double t_next = (k + 1 == grid.steps) ? T : static_cast<double>(k + 1) * h;
    const double log_r_next = std::log(r(t_next));
    const double e = std::exp(std::min(-beta * q, 700.0));
    q += (push * e - pull) * h - (log_r_next - log_r) / beta + noise * normal(rng);
    log_r = log_r_next;
    if (!std::isfinite(q)) {
      std::ostringstream msg;
      msg << "simulate_truth: state became non-finite at step " << k + 1 << " (t=" << t_next << ")";
      throw std::runtime_error(msg.str());
    }
    if ((k + 1) % grid.record_stride == 0) record(t_next);
  }
  return path;
}

/// y_s = (S(t_s)/K) exp(sigma eps_s); every t_s must lie on the path grid.
template <class Rng>
TimeSeriesData generate_observations(const TruthPath& path, double sigma,
                                     const std::vector<double>& times, Rng& rng) {
  if (!(sigma > 0.0)) throw ValidationError("generate_observations: sigma must be positive");
  if (path.t.empty()) throw ValidationError("generate_observations: empty path");
  const double tol = 1e-9 * std::max(1.0, path.t.back());
  std::normal_distribution<double> normal(0.0, 1.0);
  TimeSeriesData data;
  data.times.reserve(times.size());
  data.values.reserve(times.size());
  for (double ts : times) {
    const auto it = std::lower_bound(path.t.begin(), path.t.end(), ts - tol);
    if (it == path.t.end() || std::abs(*it - ts) > tol) {
      std::ostringstream msg;
      msg << "generate_observations: time " << ts << " is not on the path grid";
      throw ValidationError(msg.str());
    }
    const std::size_t idx = static_cast<std::size_t>(it - path.t.begin());
    data.times.push_back(ts);
    data.values.push_back(path.S[idx] / path.params.K * std::exp(sigma * normal(rng)));
  }
  return data;
}

}  // namespace sdehmc
