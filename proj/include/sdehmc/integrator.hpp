#pragma once

// Reversible multi-timescale propagator
//
//   ( e^{iL_N dtau/2}  e^{iL' dtau}  e^{iL_N dtau/2} )^P,
//
// where the outer factor rotates every staging oscillator exactly and the
// inner factor is one velocity-Verlet step on H' (boundary beads and
// parameters move, staging beads only receive momentum kicks).

#include <cmath>
#include <concepts>
#include <cstddef>
#include <optional>
#include <sstream>
#include <vector>

#include "sdehmc/energy.hpp"
#include "sdehmc/lattice.hpp"
#include "sdehmc/layout.hpp"

namespace sdehmc {

struct IntegratorConfig {
  double d_tau = 0.25;
  std::size_t P = 3;

  double tau() const { return d_tau * static_cast<double>(P); }

  void validate() const {
    if (!(d_tau > 0.0) || !std::isfinite(d_tau) || P < 1) {
      throw ValidationError("integrator: need d_tau > 0 and P >= 1");
    }
  }
};

/// A Hamiltonian split as H_N (staging oscillators, shared by every target)
/// plus a target-specific H' whose gradient drives the Verlet step.
template <class T>
concept SplitHamiltonian = requires(const T& h, const PolymerState& s) {
  { h.layout() } -> std::convertible_to<const LatticeLayout&>;
  { h.masses() } -> std::convertible_to<const EffectiveMasses&>;
  { h.energy(s) } -> std::same_as<EnergyBreakdown>;
  { h.gradient(s) } -> std::same_as<Gradient>;
};

/// Per-oscillator frequencies and the rotation for a half step dtau/2.
/// Entry m (1..j-1) is the oscillator of every bead at offset m inside a
/// segment; entry 0 is unused.
struct OscillatorBank {
  double mass = 1.0;
  std::vector<double> omega;
  std::vector<double> cos_half;
  std::vector<double> sin_half;
};

/// omega_m^2 = k_m / mass with k_m = T (m+1) / (dt m), mass = m'/dt.
/// This makes each rotation the exact flow of its term in H_N.
inline OscillatorBank make_oscillator_bank(const LatticeLayout& layout,
                                           const EffectiveMasses& masses, double d_tau) {
  OscillatorBank bank;
  bank.mass = masses.staging;
  const std::size_t j = layout.j;
  bank.omega.assign(j, 0.0);
  bank.cos_half.assign(j, 1.0);
  bank.sin_half.assign(j, 0.0);
  for (std::size_t m = 1; m < j; ++m) {
    bank.omega[m] = std::sqrt(staging_stiffness(layout, m) / bank.mass);
    bank.cos_half[m] = std::cos(0.5 * bank.omega[m] * d_tau);
    bank.sin_half[m] = std::sin(0.5 * bank.omega[m] * d_tau);
  }
  return bank;
}

inline void harmonic_half_step(PolymerState& state, const LatticeLayout& layout,
                               const OscillatorBank& bank) {
  for (std::size_t s = 0; s < layout.n; ++s) {
    const std::size_t b = s * layout.j;
    for (std::size_t m = 1; m < layout.j; ++m) {
      const double c = bank.cos_half[m];
      const double sn = bank.sin_half[m];
      const double mw = bank.mass * bank.omega[m];
      const double u = state.u[b + m];
      const double p = state.p[b + m];
      state.u[b + m] = u * c + p / mw * sn;
      state.p[b + m] = p * c - mw * u * sn;
    }
  }
}

enum class TrajectoryStatus { completed, left_domain, non_finite };

inline const char* to_string(TrajectoryStatus s) {
  switch (s) {
    case TrajectoryStatus::completed: return "completed";
    case TrajectoryStatus::left_domain: return "left_domain";
    case TrajectoryStatus::non_finite: return "non_finite";
  }
  return "unknown";
}

struct VerletOutcome {
  TrajectoryStatus status = TrajectoryStatus::completed;
  Gradient gradient;  // dH'/d(u, theta) at the new positions
};

/// One velocity-Verlet step of length d_tau on H', given the gradient at the
/// current positions. Force is -gradient.
template <class GradFn>
VerletOutcome inner_verlet_step(PolymerState& state, const LatticeLayout& layout,
                                const EffectiveMasses& masses, double d_tau,
                                const Gradient& start, GradFn&& gradient) {
  const double half = 0.5 * d_tau;
  for (std::size_t i = 0; i < layout.N; ++i) state.p[i] -= half * start.g_u[i];
  for (std::size_t s = 0; s <= layout.n; ++s) {
    const std::size_t b = layout.measurement_index(s);
    state.u[b] += d_tau * state.p[b] / masses.boundary;
  }
  for (std::size_t a = 0; a < 2; ++a) {
    state.pi[a] -= half * start.g_theta[a];
    state.theta[a] += d_tau * state.pi[a] / masses.params[a];
  }

  VerletOutcome out;
  if (!(state.theta[kBeta] > 0.0) || !(state.theta[kGamma] > 0.0)) {
    out.status = TrajectoryStatus::left_domain;
    return out;
  }
  try {
    out.gradient = gradient(static_cast<const PolymerState&>(state));
  } catch (const NonFiniteError&) {
    out.status = TrajectoryStatus::non_finite;
    return out;
  }
  for (std::size_t i = 0; i < layout.N; ++i) state.p[i] -= half * out.gradient.g_u[i];
  for (std::size_t a = 0; a < 2; ++a) state.pi[a] -= half * out.gradient.g_theta[a];
  return out;
}

/// P repetitions of (harmonic half, Verlet, harmonic half). Stops early if
/// the parameters leave beta > 0, gamma > 0 or a force becomes non-finite;
/// the caller treats such a trajectory as rejected.
template <SplitHamiltonian Target>
TrajectoryStatus trotter_propagate(PolymerState& state, const Target& target,
                                   const OscillatorBank& bank, const IntegratorConfig& config) {
  const auto& layout = target.layout();
  const auto& masses = target.masses();
  auto grad = [&target](const PolymerState& s) { return target.gradient(s); };
  for (std::size_t step = 0; step < config.P; ++step) {
    harmonic_half_step(state, layout, bank);
    Gradient g;
    try {
      g = target.gradient(state);
    } catch (const NonFiniteError&) {
      return TrajectoryStatus::non_finite;
    }
    const auto out = inner_verlet_step(state, layout, masses, config.d_tau, g, grad);
    if (out.status != TrajectoryStatus::completed) return out.status;
    harmonic_half_step(state, layout, bank);
  }
  return TrajectoryStatus::completed;
}

inline void flip_momenta(PolymerState& state) {
  for (double& p : state.p) p = -p;
  state.pi[0] = -state.pi[0];
  state.pi[1] = -state.pi[1];
}

}  // namespace sdehmc
