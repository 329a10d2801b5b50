#pragma once

#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>

namespace sdehmc {

/// Thrown for invalid user-facing inputs (lengths, signs, missing fields).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Discretization geometry of the observation window [0, T].
///
/// Beads are indexed 0..N-1 (N = n*j + 1). Measurement ("boundary") beads
/// sit at indices s*j for s = 0..n; the j-1 beads in between each pair of
/// boundaries are staging beads.
struct LatticeLayout {
  std::size_t n = 0;   // measurement intervals
  std::size_t j = 0;   // bins per interval
  std::size_t N = 0;   // total beads
  double dt = 0.0;     // lattice spacing
  double T = 0.0;      // observation window

  std::size_t measurement_index(std::size_t s) const { return s * j; }
  std::size_t measurement_count() const { return n + 1; }
  bool is_boundary(std::size_t i) const { return i % j == 0; }
  double time(std::size_t i) const { return static_cast<double>(i) * dt; }
  /// Number of oscillator bonds per unit T/dt; exactly n*j.
  double steps() const { return static_cast<double>(n * j); }
};

inline LatticeLayout build_layout(long n, long j, double T) {
  if (n < 1 || j < 1 || !(T > 0.0) || !std::isfinite(T)) {
    std::ostringstream msg;
    msg << "build_layout: need n >= 1, j >= 1, T > 0 (got n=" << n
        << ", j=" << j << ", T=" << T << ")";
    throw ValidationError(msg.str());
  }
  LatticeLayout layout;
  layout.n = static_cast<std::size_t>(n);
  layout.j = static_cast<std::size_t>(j);
  layout.N = layout.n * layout.j + 1;
  layout.T = T;
  layout.dt = T / static_cast<double>(layout.n * layout.j);
  return layout;
}

}  // namespace sdehmc
