#pragma once

// Staging coordinates for the discretized path.
//
// Within segment s (beads b = s*j .. b+j, both ends boundary beads), the
// staging variable of intermediate bead b+m (m = 1..j-1) is
//
//   u_{b+m} = q_{b+m} - (m q_{b+m+1} + q_b) / (m + 1),
//
// while boundary beads are left untouched. The inverse is the backward
// recursion q_{b+m} = u_{b+m} + m/(m+1) q_{b+m+1} + u_b/(m+1).

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <sstream>
#include <vector>

#include "sdehmc/layout.hpp"
#include "sdehmc/model.hpp"

namespace sdehmc {

inline constexpr std::size_t kBeta = 0;
inline constexpr std::size_t kGamma = 1;

/// Full phase-space point: staging positions u, parameters theta = (beta,
/// gamma), bead momenta p and parameter momenta pi.
struct PolymerState {
  std::vector<double> u;
  std::vector<double> p;
  std::array<double, 2> theta{0.0, 0.0};
  std::array<double, 2> pi{0.0, 0.0};

  double beta() const { return theta[kBeta]; }
  double gamma() const { return theta[kGamma]; }
};

struct MassConfig {
  double M = 720.0;        // measurement beads
  double m_prime = 130.0;  // staging beads
  std::array<double, 2> m_alpha{150.0, 150.0};

  void validate() const {
    if (!(M > 0.0) || !(m_prime > 0.0) || !(m_alpha[0] > 0.0) || !(m_alpha[1] > 0.0)) {
      throw ValidationError("masses: M, m_prime and m_alpha must all be positive");
    }
  }
};

/// Masses entering the kinetic energy sum p^2 / (2 m). Boundary beads use
/// M directly, staging beads m' / dt, parameters m_alpha.
struct EffectiveMasses {
  double boundary = 1.0;
  double staging = 1.0;
  std::array<double, 2> params{1.0, 1.0};

  double bead(const LatticeLayout& layout, std::size_t i) const {
    return layout.is_boundary(i) ? boundary : staging;
  }
};

inline EffectiveMasses effective_masses(const MassConfig& masses, const LatticeLayout& layout) {
  masses.validate();
  return {masses.M, masses.m_prime / layout.dt, masses.m_alpha};
}

namespace detail {
inline void require_length(std::span<const double> v, const LatticeLayout& layout,
                           const char* who) {
  if (v.size() != layout.N) {
    std::ostringstream msg;
    msg << who << ": expected " << layout.N << " entries, got " << v.size();
    throw ValidationError(msg.str());
  }
}
}  // namespace detail

inline std::vector<double> staging_forward(std::span<const double> q, const LatticeLayout& layout) {
  detail::require_length(q, layout, "staging_forward");
  std::vector<double> u(q.begin(), q.end());
  const std::size_t j = layout.j;
  for (std::size_t s = 0; s < layout.n; ++s) {
    const std::size_t b = s * j;
    for (std::size_t m = 1; m < j; ++m) {
      const double md = static_cast<double>(m);
      u[b + m] = q[b + m] - (md * q[b + m + 1] + q[b]) / (md + 1.0);
    }
  }
  return u;
}

inline void staging_inverse(std::span<const double> u, const LatticeLayout& layout,
                            std::span<double> q) {
  detail::require_length(u, layout, "staging_inverse");
  detail::require_length(q, layout, "staging_inverse");
  const std::size_t j = layout.j;
  for (std::size_t s = 0; s <= layout.n; ++s) q[s * j] = u[s * j];
  for (std::size_t s = 0; s < layout.n; ++s) {
    const std::size_t b = s * j;
    for (std::size_t m = j - 1; m >= 1; --m) {
      const double md = static_cast<double>(m);
      q[b + m] = u[b + m] + md / (md + 1.0) * q[b + m + 1] + u[b] / (md + 1.0);
    }
  }
}

inline std::vector<double> staging_inverse(std::span<const double> u, const LatticeLayout& layout) {
  std::vector<double> q(u.size());
  staging_inverse(u, layout, q);
  return q;
}

/// Transpose of the (linear) map u -> q: turns dH/dq into dH/du.
inline void staging_adjoint(std::span<const double> g_q, const LatticeLayout& layout,
                            std::span<double> g_u) {
  detail::require_length(g_q, layout, "staging_adjoint");
  detail::require_length(g_u, layout, "staging_adjoint");
  const std::size_t j = layout.j;
  for (std::size_t i = 0; i < layout.N; ++i) g_u[i] = layout.is_boundary(i) ? g_q[i] : 0.0;
  for (std::size_t s = 0; s < layout.n; ++s) {
    const std::size_t b = s * j;
    double carry = 0.0;  // adjoint flowing from q_{b+m-1} into q_{b+m}
    for (std::size_t m = 1; m < j; ++m) {
      const double md = static_cast<double>(m);
      const double a = g_q[b + m] + carry;
      g_u[b + m] = a;
      g_u[b] += a / (md + 1.0);
      carry = a * md / (md + 1.0);
    }
    g_u[b + j] += carry;
  }
}

inline std::vector<double> staging_adjoint(std::span<const double> g_q, const LatticeLayout& layout) {
  std::vector<double> g_u(g_q.size());
  staging_adjoint(g_q, layout, g_u);
  return g_u;
}

/// Boundary beads at ln(y_s / r(t_s)) / beta, intermediate beads on the
/// linear interpolation (so every staging coordinate is zero), momenta zero.
inline PolymerState initial_state(const TimeSeriesData& data, const DimensionlessParams& theta0,
                                  const LatticeLayout& layout, const InputSignal& r) {
  if (data.size() != layout.measurement_count()) {
    std::ostringstream msg;
    msg << "initial_state: data has " << data.size() << " observations, layout expects "
        << layout.measurement_count();
    throw ValidationError(msg.str());
  }
  if (!(theta0.beta > 0.0) || !(theta0.gamma > 0.0)) {
    throw ValidationError("initial_state: beta and gamma must be positive");
  }
  PolymerState state;
  state.u.assign(layout.N, 0.0);
  state.p.assign(layout.N, 0.0);
  state.theta = {theta0.beta, theta0.gamma};
  for (std::size_t s = 0; s < data.size(); ++s) {
    state.u[layout.measurement_index(s)] = std::log(data.values[s] / r(data.times[s])) / theta0.beta;
  }
  return state;
}

}  // namespace sdehmc
