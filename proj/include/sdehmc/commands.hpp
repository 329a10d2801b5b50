#pragma once

// The three tool commands, callable in-process. Each takes a resolved
// configuration document (see config.hpp), writes its outputs under the
// configured directory and returns what it wrote.
//
// Errors: ValidationError (including io::FileError) for bad input, any
// other exception for runtime failure.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "sdehmc/config.hpp"
#include "sdehmc/diagnostics.hpp"
#include "sdehmc/energy.hpp"
#include "sdehmc/io.hpp"
#include "sdehmc/model.hpp"
#include "sdehmc/sampler.hpp"

namespace sdehmc::cli {

namespace fs = std::filesystem;

inline std::string chain_file_name(std::size_t chain) { return "chain_" + std::to_string(chain) + ".csv"; }

inline std::string checkpoint_file_name(std::size_t chain) {
  return "checkpoint_chain_" + std::to_string(chain) + ".csv";
}

struct SimulateResult {
  TruthPath truth;
  TimeSeriesData data;
};

/// Truth path on a grid of n*j*fine_factor Euler steps, then observations
/// at the n+1 measurement times. Both draws come from one RNG seeded by
/// `seed`, path first.
inline SimulateResult cmd_simulate(const json& resolved) {
  const auto c = parse_simulate(resolved);
  const auto input = c.input.load();
  input.validate(c.model.T);
  build_layout(static_cast<long>(c.n), static_cast<long>(c.j), c.model.T);

  const fs::path out(c.out);
  io::write_json(out / "config.json", resolved);

  auto rng = make_rng(c.seed);
  SimulateResult res;
  res.truth = simulate_truth(c.model, input, SimulationGrid{c.n * c.j * c.fine_factor, 1}, c.S0, rng);
  res.data = generate_observations(res.truth, c.sigma, observation_times(c.n, c.model.T), rng);
  io::write_truth_csv(out / "truth.csv", res.truth);
  io::write_observations_csv(out / "observations.csv", res.data);
  return res;
}

inline json chain_metadata_json(const ChainMetadata& m) {
  return {{"chain", m.chain_index}, {"seed", m.seed},       {"T", m.T},
          {"wall_seconds", m.wall_seconds}, {"data_digest", m.data_digest}, {"error", m.error}};
}

struct InferResult {
  std::vector<ChainRecord> chains;
  std::optional<PosteriorSummary> summary;
};

/// Runs every chain, writes chain_<c>.csv plus chain_<c>.json metadata and a
/// pooled summary.json. If any chain fails the others are still written and
/// a runtime_error naming the failures is thrown at the end.
inline InferResult cmd_infer(const json& resolved) {
  const auto c = parse_infer(resolved);
  const auto data = io::read_observations_csv(c.observations);
  const double T = data.span();
  PathPosterior post(data, c.input.load(), c.sigma, c.j, c.masses);
  const auto hmc = hmc_config(c, T);
  hmc.validate();

  const fs::path out(c.out);
  io::write_json(out / "config.json", resolved);

  CheckpointFn checkpoint;
  if (c.checkpoint_every > 0) {
    const auto layout = post.layout();
    checkpoint = [out, layout](std::size_t chain, std::size_t iter, const PolymerState& s) {
      io::write_snapshot(out / checkpoint_file_name(chain), s, layout, iter, chain);
    };
  }

  InferResult res;
  res.chains = run_parallel_chains(post, hmc, checkpoint);

  std::vector<ChainRecord> ok;
  std::ostringstream failures;
  for (const auto& rec : res.chains) {
    const std::size_t idx = rec.meta.chain_index;
    fs::path meta = out / chain_file_name(idx);
    meta.replace_extension(".json");
    io::write_json(meta, chain_metadata_json(rec.meta));
    if (!rec.meta.error.empty()) {
      failures << " chain " << idx << ": " << rec.meta.error << ';';
      continue;
    }
    io::write_chain_csv(out / chain_file_name(idx), rec);
    ok.push_back(rec);
  }
  if (!ok.empty()) {
    res.summary = summarize(ok, c.discard);
    io::write_json(out / "summary.json", io::to_json(*res.summary, c.discard));
  }
  if (!failures.str().empty()) throw std::runtime_error("chain failure:" + failures.str());
  return res;
}

struct SummarizeResult {
  PosteriorSummary summary;
  std::vector<std::string> density_files;
  std::vector<std::string> warnings;
};

/// Pools chain CSVs (identical headers required), applies the discard
/// fraction per chain, writes summary.json and density_<param>.csv.
inline SummarizeResult cmd_summarize(const json& resolved) {
  const auto c = parse_summarize(resolved);
  std::vector<ChainRecord> records;
  for (const auto& f : c.chain_files) records.push_back(io::read_chain_csv(f));

  const fs::path out(c.out);
  io::write_json(out / "config.json", resolved);

  SummarizeResult res;
  res.summary = summarize(records, c.discard);
  io::write_json(out / "summary.json", io::to_json(res.summary, c.discard));

  std::vector<double> beta, gamma, K;
  for (const auto& rec : records) {
    for (std::size_t i = discard_count(rec.rows.size(), c.discard); i < rec.rows.size(); ++i) {
      beta.push_back(rec.rows[i].beta);
      gamma.push_back(rec.rows[i].gamma);
      K.push_back(rec.rows[i].K);
    }
  }
  const std::pair<const char*, const std::vector<double>*> series[] = {
      {"beta", &beta}, {"gamma", &gamma}, {"K", &K}};
  for (const auto& [name, values] : series) {
    try {
      const double h = c.bandwidth ? *c.bandwidth : silverman_bandwidth(*values);
      const auto grid = kde_grid(*values, h, c.grid_points);
      const auto dens = kde(*values, grid, h);
      const std::string file = std::string("density_") + name + ".csv";
      io::write_density_csv(out / file, grid, dens);
      res.density_files.push_back(file);
    } catch (const std::invalid_argument& e) {
      res.warnings.push_back(std::string(name) + ": " + e.what());
    }
  }
  return res;
}

}  // namespace sdehmc::cli
