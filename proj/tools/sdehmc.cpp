// sdehmc: simulate data, run path-integral HMC inference, summarize chains.
//
// Exit codes: 0 success, 1 runtime failure, 2 validation failure.

#include <cstdint>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "sdehmc/commands.hpp"
#include "sdehmc/config.hpp"
#include "sdehmc/io.hpp"

namespace {

using sdehmc::cli::Command;
using json = nlohmann::json;

struct Flags {
  std::string config;
  std::string preset;
  std::string out;
  std::uint64_t seed = 0;
  std::size_t chains = 0;
  std::size_t n_mc = 0;
  double discard = 0.0;
  std::string observations;
  std::vector<std::string> chain_files;
};

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "JSON configuration file");
  sub->add_option("--preset", f.preset, "named preset")->check(CLI::IsMember(sdehmc::cli::preset_names()));
  sub->add_option("--out", f.out, "output directory");
}

json flag_layer(const CLI::App* sub, const Flags& f) {
  json j = json::object();
  auto given = [sub](const char* name) {
    const auto* opt = sub->get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
  };
  if (given("--out")) j["out"] = f.out;
  if (given("--seed")) j["seed"] = f.seed;
  if (given("--chains")) j["chains"] = f.chains;
  if (given("--n-mc")) j["n_mc"] = f.n_mc;
  if (given("--discard")) j["discard"] = f.discard;
  if (given("--observations")) j["observations"] = f.observations;
  if (given("chains")) j["chains"] = f.chain_files;
  return j;
}

int run(Command cmd, const CLI::App* sub, const Flags& f) {
  std::optional<json> file;
  if (!f.config.empty()) file = sdehmc::io::read_json(f.config);
  std::optional<std::string> preset;
  if (!f.preset.empty()) preset = f.preset;
  const json resolved = sdehmc::cli::resolve(cmd, preset, file, flag_layer(sub, f));
  std::cout << resolved.dump(2) << std::endl;

  switch (cmd) {
    case Command::simulate: {
      const auto res = sdehmc::cli::cmd_simulate(resolved);
      std::cerr << "simulate: " << res.truth.t.size() << " path points, " << res.data.size()
                << " observations\n";
      break;
    }
    case Command::infer: {
      const auto res = sdehmc::cli::cmd_infer(resolved);
      for (const auto& rec : res.chains) {
        std::cerr << "infer: chain " << rec.meta.chain_index << " acceptance " << rec.acceptance_rate()
                  << " in " << rec.meta.wall_seconds << " s\n";
      }
      break;
    }
    case Command::summarize: {
      const auto res = sdehmc::cli::cmd_summarize(resolved);
      for (const auto& w : res.warnings) std::cerr << "summarize: no density for " << w << '\n';
      break;
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Path-integral HMC inference for a stochastic reservoir model"};
  app.require_subcommand(1);

  Flags f;
  auto* simulate = app.add_subcommand("simulate", "simulate a truth path and noisy observations");
  add_common(simulate, f);
  simulate->add_option("--seed", f.seed, "RNG seed");

  auto* infer = app.add_subcommand("infer", "sample the parameter posterior");
  add_common(infer, f);
  infer->add_option("--seed", f.seed, "master seed; chain seeds derive from it");
  infer->add_option("--chains", f.chains, "number of independent chains")->check(CLI::PositiveNumber);
  infer->add_option("--observations", f.observations, "observations CSV (t,y)");
  infer->add_option("--n-mc", f.n_mc, "iterations per chain")->check(CLI::PositiveNumber);
  infer->add_option("--discard", f.discard, "fraction of each chain dropped from the summary");

  auto* summarize = app.add_subcommand("summarize", "pool chain CSVs into a summary and densities");
  add_common(summarize, f);
  summarize->add_option("--discard", f.discard, "fraction of each chain dropped");
  summarize->add_option("chains", f.chain_files, "chain CSV files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  const CLI::App* sub = nullptr;
  Command cmd = Command::simulate;
  if (simulate->parsed()) {
    sub = simulate;
  } else if (infer->parsed()) {
    sub = infer;
    cmd = Command::infer;
  } else {
    sub = summarize;
    cmd = Command::summarize;
  }

  try {
    return run(cmd, sub, f);
  } catch (const sdehmc::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
