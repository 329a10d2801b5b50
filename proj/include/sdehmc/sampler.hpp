#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <exception>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "sdehmc/energy.hpp"
#include "sdehmc/integrator.hpp"
#include "sdehmc/lattice.hpp"
#include "sdehmc/model.hpp"

namespace sdehmc {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; decorrelates per-chain seeds derived from one master.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t chain_seed(std::uint64_t master, std::size_t chain) {
  return splitmix64(master ^ splitmix64(static_cast<std::uint64_t>(chain) + 1));
}

inline Rng make_rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  return Rng(seq);
}

struct HmcConfig {
  std::size_t n_mc = 50000;
  MassConfig masses;
  IntegratorConfig integrator;
  std::uint64_t seed = 1;
  DimensionlessParams theta0{0.0, 0.0};
  std::size_t chains = 1;
  std::size_t checkpoint_every = 0;  // 0 disables checkpoints

  void validate() const {
    if (n_mc < 1) throw ValidationError("n_mc must be >= 1");
    if (chains < 1) throw ValidationError("chains must be >= 1");
    masses.validate();
    integrator.validate();
    if (!(theta0.beta > 0.0) || !(theta0.gamma > 0.0)) {
      throw ValidationError("theta0: beta and gamma must be positive");
    }
  }
};

/// Draws p_i ~ N(0, m_i) and pi_a ~ N(0, m_alpha) into the state.
template <class URBG>
void sample_momenta(PolymerState& state, const EffectiveMasses& masses,
                    const LatticeLayout& layout, URBG& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double sd_boundary = std::sqrt(masses.boundary);
  const double sd_staging = std::sqrt(masses.staging);
  state.p.resize(layout.N);
  for (std::size_t i = 0; i < layout.N; ++i) {
    state.p[i] = (layout.is_boundary(i) ? sd_boundary : sd_staging) * normal(rng);
  }
  for (std::size_t a = 0; a < 2; ++a) state.pi[a] = std::sqrt(masses.params[a]) * normal(rng);
}

/// Accept iff uniform < min(1, exp(h_before - h_after)).
inline bool metropolis_accept(double h_before, double h_after, double uniform) {
  if (!std::isfinite(h_after)) return false;
  const double dH = h_after - h_before;
  return dH <= 0.0 || uniform < std::exp(-dH);
}

struct IterationStats {
  bool accepted = false;
  double h_before = 0.0;
  double h_after = 0.0;
  double dH = 0.0;
  TrajectoryStatus status = TrajectoryStatus::completed;
};

template <SplitHamiltonian Target, class URBG>
IterationStats hmc_iteration(PolymerState& state, const Target& target, const OscillatorBank& bank,
                             const IntegratorConfig& integrator, URBG& rng) {
  sample_momenta(state, target.masses(), target.layout(), rng);
  IterationStats stats;
  stats.h_before = target.energy(state).total;

  PolymerState proposal = state;
  stats.status = trotter_propagate(proposal, target, bank, integrator);
  stats.h_after = std::numeric_limits<double>::infinity();
  if (stats.status == TrajectoryStatus::completed) {
    stats.h_after = target.energy(proposal).total;
    if (!std::isfinite(stats.h_after)) {
      stats.status = TrajectoryStatus::non_finite;
      stats.h_after = std::numeric_limits<double>::infinity();
    }
  }
  stats.dH = stats.h_after - stats.h_before;

  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double u = uniform(rng);
  stats.accepted = metropolis_accept(stats.h_before, stats.h_after, u);
  if (stats.accepted) state = std::move(proposal);
  return stats;
}

struct ChainRow {
  std::size_t iter = 0;
  double beta = 0.0;
  double gamma = 0.0;
  double K = 0.0;
  bool accepted = false;
  double h_before = 0.0;
  double h_after = 0.0;
  double dH = 0.0;
};

struct ChainMetadata {
  std::uint64_t seed = 0;
  std::size_t chain_index = 0;
  double T = 0.0;
  double wall_seconds = 0.0;
  std::uint64_t data_digest = 0;
  std::string error;  // set when the chain failed
};

struct ChainRecord {
  std::vector<ChainRow> rows;
  ChainMetadata meta;

  double acceptance_rate() const {
    if (rows.empty()) return 0.0;
    std::size_t n = 0;
    for (const auto& r : rows) n += r.accepted ? 1 : 0;
    return static_cast<double>(n) / static_cast<double>(rows.size());
  }
};

/// FNV-1a over the raw bytes of the observation times and values.
inline std::uint64_t data_digest(const TimeSeriesData& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](double v) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof(double));
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 0x100000001b3ULL;
    }
  };
  for (double t : data.times) mix(t);
  for (double v : data.values) mix(v);
  return h;
}

/// Called with (chain index, iteration, current state) every
/// HmcConfig::checkpoint_every iterations. Must be safe to call from
/// several chains at once.
using CheckpointFn = std::function<void(std::size_t, std::size_t, const PolymerState&)>;

/// Runs n_mc iterations from a given state. Row i holds the state after
/// iteration i (the reverted state on rejection).
template <SplitHamiltonian Target, class URBG>
std::vector<ChainRow> run_iterations(PolymerState& state, const Target& target,
                                     const HmcConfig& config, URBG& rng, double T,
                                     std::size_t chain_index = 0,
                                     const CheckpointFn& checkpoint = {}) {
  const auto bank = make_oscillator_bank(target.layout(), target.masses(), config.integrator.d_tau);
  std::vector<ChainRow> rows;
  rows.reserve(config.n_mc);
  for (std::size_t it = 0; it < config.n_mc; ++it) {
    const auto stats = hmc_iteration(state, target, bank, config.integrator, rng);
    ChainRow row;
    row.iter = it;
    row.beta = state.beta();
    row.gamma = state.gamma();
    row.K = retention_time(row.beta, row.gamma, T);
    row.accepted = stats.accepted;
    row.h_before = stats.h_before;
    row.h_after = stats.h_after;
    row.dH = stats.dH;
    rows.push_back(row);
    if (checkpoint && config.checkpoint_every > 0 && (it + 1) % config.checkpoint_every == 0) {
      try {
        checkpoint(chain_index, it + 1, state);
      } catch (const std::exception& e) {
        std::ostringstream msg;
        msg << "checkpoint failed at iteration " << it + 1 << ": " << e.what();
        throw std::runtime_error(msg.str());
      }
    }
  }
  return rows;
}

inline ChainRecord run_chain(const PathPosterior& post, const HmcConfig& config,
                             std::size_t chain_index = 0, const CheckpointFn& checkpoint = {}) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  ChainRecord record;
  record.meta.seed = chain_seed(config.seed, chain_index);
  record.meta.chain_index = chain_index;
  record.meta.T = post.layout().T;
  record.meta.data_digest = data_digest(post.data());

  auto rng = make_rng(record.meta.seed);
  auto state = initial_state(post.data(), config.theta0, post.layout(), post.input());
  record.rows = run_iterations(state, post, config, rng, post.layout().T, chain_index, checkpoint);
  record.meta.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return record;
}

/// Independent chains, one per worker thread. A failing chain yields a
/// record with meta.error set and leaves its siblings running.
inline std::vector<ChainRecord> run_parallel_chains(const PathPosterior& post,
                                                    const HmcConfig& config,
                                                    const CheckpointFn& checkpoint = {},
                                                    std::size_t max_threads = 0) {
  config.validate();
  std::vector<ChainRecord> out(config.chains);
  std::size_t workers = max_threads > 0 ? max_threads : std::thread::hardware_concurrency();
  workers = std::clamp<std::size_t>(workers, 1, config.chains);

  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (std::size_t c = next++; c < config.chains; c = next++) {
      try {
        out[c] = run_chain(post, config, c, checkpoint);
      } catch (const std::exception& e) {
        out[c].meta.chain_index = c;
        out[c].meta.seed = chain_seed(config.seed, c);
        out[c].meta.error = e.what();
      }
    }
  };
  if (workers == 1) {
    work();
    return out;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  pool.clear();  // joins
  return out;
}

}  // namespace sdehmc
