#pragma once

// Split Hamiltonian for the path posterior in staging coordinates:
//
//   H = H_N + H_n + H_1,
//
//   H_N  harmonic bonds + kinetic energy of the staging beads (exactly
//        solvable oscillators, one per intermediate bead),
//   H_n  boundary-bead kinetic energy, measurement term and the
//        boundary-to-boundary harmonic coupling,
//   H_1  parameter kinetic energy and the drift part of the path action.
//
// H' = H_n + H_1 is integrated with velocity Verlet; its gradient is
// computed analytically in q-coordinates and pulled back through the
// staging map with staging_adjoint.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "sdehmc/lattice.hpp"
#include "sdehmc/layout.hpp"
#include "sdehmc/model.hpp"

namespace sdehmc {

struct EnergyBreakdown {
  double h_N = 0.0;
  double h_n = 0.0;
  double h_1 = 0.0;
  double total = 0.0;
};

/// Partial derivatives of H' with respect to u_i and (beta, gamma).
struct Gradient {
  std::vector<double> g_u;
  std::array<double, 2> g_theta{0.0, 0.0};
};

class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kMaxExponent = 700.0;

/// exp(-beta q) with the exponent clamped at +700.
inline double decay_factor(double beta, double q) {
  return std::exp(std::min(-beta * q, kMaxExponent));
}

/// Stiffness of staging bead b+m: T (m+1) / (dt m).
inline double staging_stiffness(const LatticeLayout& layout, std::size_t m) {
  const double md = static_cast<double>(m);
  return layout.T * (md + 1.0) / (layout.dt * md);
}

inline double h_N(const PolymerState& state, const EffectiveMasses& masses,
                  const LatticeLayout& layout) {
  double sum = 0.0;
  for (std::size_t s = 0; s < layout.n; ++s) {
    const std::size_t b = s * layout.j;
    for (std::size_t m = 1; m < layout.j; ++m) {
      const double u = state.u[b + m];
      const double p = state.p[b + m];
      sum += p * p / masses.staging + staging_stiffness(layout, m) * u * u;
    }
  }
  return 0.5 * sum;
}

inline double kinetic_energy(const PolymerState& state, const EffectiveMasses& masses,
                             const LatticeLayout& layout) {
  double sum = 0.0;
  for (std::size_t i = 0; i < layout.N; ++i) sum += state.p[i] * state.p[i] / masses.bead(layout, i);
  sum += state.pi[0] * state.pi[0] / masses.params[0];
  sum += state.pi[1] * state.pi[1] / masses.params[1];
  return 0.5 * sum;
}

/// Data, input and masses of one inference problem, with the
/// parameter-independent pieces of rho precomputed.
class PathPosterior {
 public:
  PathPosterior(TimeSeriesData data, InputSignal input, double sigma, std::size_t j,
                const MassConfig& masses)
      : data_(std::move(data)), input_(std::move(input)), sigma_(sigma) {
    data_.validate();
    if (!(sigma_ > 0.0)) throw ValidationError("sigma must be positive");
    layout_ = build_layout(static_cast<long>(data_.size() - 1), static_cast<long>(j), data_.span());
    input_.validate(layout_.T);
    masses_ = effective_masses(masses, layout_);
    mass_config_ = masses;

    targets_.resize(data_.size());
    for (std::size_t s = 0; s < data_.size(); ++s) {
      targets_[s] = std::log(data_.values[s] / input_(data_.times[s]));
    }
    rate_ = log_rate_terms(input_, layout_);
    rate_dot_.assign(layout_.N, 0.0);
    for (std::size_t i = 2; i < layout_.N; ++i) {
      rate_dot_[i] = (rate_[i] - rate_[i - 1]) / layout_.dt;
    }
  }

  const LatticeLayout& layout() const { return layout_; }
  const EffectiveMasses& masses() const { return masses_; }
  const MassConfig& mass_config() const { return mass_config_; }
  const TimeSeriesData& data() const { return data_; }
  const InputSignal& input() const { return input_; }
  double sigma() const { return sigma_; }

  /// ln(y_s / r(t_s)) for s = 0..n.
  std::span<const double> targets() const { return targets_; }
  /// L_i = T ln(r_i / r_{i-1}) / dt.
  std::span<const double> rate() const { return rate_; }
  /// (L_i - L_{i-1}) / dt for i >= 2, zero for i < 2; rho_dot_i = this / beta.
  std::span<const double> rate_dot() const { return rate_dot_; }

  /// Drift part of the action, evaluated on q (not u). Excludes the
  /// harmonic bonds and the measurement term.
  double drift_action(std::span<const double> q, double beta, double gamma) const {
    check_params(beta, gamma);
    const std::size_t N = layout_.N;
    const double w = layout_.dt / layout_.T;
    const double c = rho_constant(beta, gamma);
    const double bg = beta / gamma;
    double sum = 0.0;
    for (std::size_t i = 1; i < N; ++i) {
      const double e = decay_factor(beta, q[i]);
      const double rho = rate_[i] / beta + c;
      const double resid = rho - bg * e;
      sum += 0.5 * resid * resid - 0.5 * beta * bg * e - layout_.T * q[i] * rate_dot_[i] / beta;
    }
    const double rho_last = rate_[N - 1] / beta + c;
    const double rho_first = rate_[1] / beta + c;
    return w * sum + decay_factor(beta, q[N - 1]) / gamma + q[N - 1] * rho_last -
           decay_factor(beta, q[0]) / gamma - q[0] * rho_first;
  }

  /// Measurement term sum_s (ln(y_s/r_s) - beta q_s)^2 / (2 sigma^2).
  double measurement_term(std::span<const double> boundary_of, double beta) const {
    double sum = 0.0;
    for (std::size_t s = 0; s < targets_.size(); ++s) {
      const double d = targets_[s] - beta * boundary_of[layout_.measurement_index(s)];
      sum += d * d;
    }
    return 0.5 * sum / (sigma_ * sigma_);
  }

  double boundary_coupling(std::span<const double> u) const {
    const double k = layout_.T / (static_cast<double>(layout_.j) * layout_.dt);
    double sum = 0.0;
    for (std::size_t s = 0; s < layout_.n; ++s) {
      const double d = u[s * layout_.j] - u[(s + 1) * layout_.j];
      sum += d * d;
    }
    return 0.5 * k * sum;
  }

  EnergyBreakdown energy(const PolymerState& state) const;
  Gradient gradient(const PolymerState& state) const;

 private:
  static void check_params(double beta, double gamma) {
    if (!(beta > 0.0) || !(gamma > 0.0)) {
      std::ostringstream msg;
      msg << "drift action needs beta > 0 and gamma > 0 (got beta=" << beta
          << ", gamma=" << gamma << ")";
      throw std::domain_error(msg.str());
    }
  }

  TimeSeriesData data_;
  InputSignal input_;
  double sigma_;
  LatticeLayout layout_;
  EffectiveMasses masses_;
  MassConfig mass_config_;
  std::vector<double> targets_;
  std::vector<double> rate_;
  std::vector<double> rate_dot_;
};

inline double h_n(const PolymerState& state, const PathPosterior& post) {
  const auto& layout = post.layout();
  double kin = 0.0;
  for (std::size_t s = 0; s <= layout.n; ++s) {
    const double p = state.p[layout.measurement_index(s)];
    kin += p * p;
  }
  kin *= 0.5 / post.masses().boundary;
  return kin + post.measurement_term(state.u, state.beta()) + post.boundary_coupling(state.u);
}

inline double h_1(const PolymerState& state, const PathPosterior& post) {
  const auto& m = post.masses();
  const double kin = 0.5 * (state.pi[0] * state.pi[0] / m.params[0] +
                            state.pi[1] * state.pi[1] / m.params[1]);
  const auto q = staging_inverse(state.u, post.layout());
  return kin + post.drift_action(q, state.beta(), state.gamma());
}

inline EnergyBreakdown h_total(const PolymerState& state, const PathPosterior& post) {
  EnergyBreakdown e;
  e.h_N = h_N(state, post.masses(), post.layout());
  e.h_n = h_n(state, post);
  e.h_1 = h_1(state, post);
  e.total = e.h_N + e.h_n + e.h_1;
  return e;
}

/// V(q, theta) written directly on the untransformed path: harmonic bonds
/// (T / 2dt) sum (q_i - q_{i-1})^2, drift action and measurement term.
inline double potential_q_form(std::span<const double> q, double beta, double gamma,
                               const PathPosterior& post) {
  const auto& layout = post.layout();
  double bonds = 0.0;
  for (std::size_t i = 1; i < layout.N; ++i) {
    const double d = q[i] - q[i - 1];
    bonds += d * d;
  }
  bonds *= 0.5 * layout.T / layout.dt;
  return bonds + post.drift_action(q, beta, gamma) + post.measurement_term(q, beta);
}

/// Total Hamiltonian via the q-form potential; must agree with h_total.
inline double hamiltonian_q_form(const PolymerState& state, const PathPosterior& post) {
  const auto q = staging_inverse(state.u, post.layout());
  return kinetic_energy(state, post.masses(), post.layout()) +
         potential_q_form(q, state.beta(), state.gamma(), post);
}

inline Gradient grad_Hprime(const PolymerState& state, const PathPosterior& post) {
  const auto& layout = post.layout();
  const std::size_t N = layout.N;
  const double beta = state.beta();
  const double gamma = state.gamma();
  if (!(beta > 0.0) || !(gamma > 0.0)) {
    throw std::domain_error("grad_Hprime: beta and gamma must be positive");
  }
  const double T = layout.T;
  const double w = layout.dt / T;
  const double bg = beta / gamma;
  const double c = rho_constant(beta, gamma);
  const double dc_dbeta = (2.0 + gamma) / (2.0 * gamma);
  const double g2 = gamma * gamma;
  const auto rate = post.rate();
  const auto rate_dot = post.rate_dot();

  const auto q = staging_inverse(state.u, layout);
  std::vector<double> g_q(N, 0.0);
  double d_beta = 0.0;
  double d_gamma = 0.0;

  for (std::size_t i = 1; i < N; ++i) {
    const double qi = q[i];
    const double e = decay_factor(beta, qi);
    const double rho = rate[i] / beta + c;
    const double rho_dot = rate_dot[i] / beta;
    const double resid = rho - bg * e;

    g_q[i] = w * (resid * beta * bg * e + 0.5 * beta * beta * bg * e - T * rho_dot);

    const double drho_dbeta = -rate[i] / (beta * beta) + dc_dbeta;
    const double dresid_dbeta = drho_dbeta - (e / gamma) * (1.0 - beta * qi);
    d_beta += w * (resid * dresid_dbeta - bg * e + 0.5 * bg * beta * qi * e +
                   T * qi * rho_dot / beta);

    const double dresid_dgamma = (beta / g2) * (e - 1.0);
    d_gamma += w * (resid * dresid_dgamma + 0.5 * beta * beta / g2 * e);
  }

  // Boundary terms e^{-beta q_N}/gamma + q_N rho_N - e^{-beta q_1}/gamma - q_1 rho_2.
  {
    const double qN = q[N - 1];
    const double eN = decay_factor(beta, qN);
    g_q[N - 1] += -bg * eN + rate[N - 1] / beta + c;
    d_beta += -qN * eN / gamma + qN * (-rate[N - 1] / (beta * beta) + dc_dbeta);
    d_gamma += -eN / g2 - qN * beta / g2;

    const double q1 = q[0];
    const double e1 = decay_factor(beta, q1);
    g_q[0] += bg * e1 - (rate[1] / beta + c);
    d_beta += q1 * e1 / gamma - q1 * (-rate[1] / (beta * beta) + dc_dbeta);
    d_gamma += e1 / g2 + q1 * beta / g2;
  }

  Gradient g;
  g.g_u.resize(N);
  staging_adjoint(g_q, layout, g.g_u);

  const double inv_s2 = 1.0 / (post.sigma() * post.sigma());
  const double k = T / (static_cast<double>(layout.j) * layout.dt);
  const auto targets = post.targets();
  for (std::size_t s = 0; s <= layout.n; ++s) {
    const std::size_t b = layout.measurement_index(s);
    const double resid = targets[s] - beta * state.u[b];
    g.g_u[b] += -beta * resid * inv_s2;
    d_beta += -state.u[b] * resid * inv_s2;
    if (s < layout.n) {
      const double d = state.u[b] - state.u[b + layout.j];
      g.g_u[b] += k * d;
      g.g_u[b + layout.j] -= k * d;
    }
  }
  g.g_theta = {d_beta, d_gamma};

  for (std::size_t i = 0; i < N; ++i) {
    if (!std::isfinite(g.g_u[i])) {
      std::ostringstream msg;
      msg << "grad_Hprime: non-finite derivative at bead " << i;
      throw NonFiniteError(msg.str());
    }
  }
  if (!std::isfinite(d_beta) || !std::isfinite(d_gamma)) {
    throw NonFiniteError("grad_Hprime: non-finite parameter derivative");
  }
  return g;
}

inline EnergyBreakdown PathPosterior::energy(const PolymerState& state) const {
  return h_total(state, *this);
}

inline Gradient PathPosterior::gradient(const PolymerState& state) const {
  return grad_Hprime(state, *this);
}

}  // namespace sdehmc
