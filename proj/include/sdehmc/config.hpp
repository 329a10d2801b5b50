#pragma once

// Run configuration for the command-line tool.
//
// A configuration is one JSON document per command. It is resolved in
// layers (built-in defaults, optional preset, config file, flags), then
// parsed strictly: unknown keys and ill-typed values are rejected with the
// dotted field name. The resolved document is what gets echoed next to the
// outputs, so feeding it back through --config reproduces the run.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "sdehmc/io.hpp"
#include "sdehmc/lattice.hpp"
#include "sdehmc/layout.hpp"
#include "sdehmc/model.hpp"
#include "sdehmc/sampler.hpp"

namespace sdehmc::cli {

using json = nlohmann::json;

enum class Command { simulate, infer, summarize };

inline const char* to_string(Command c) {
  switch (c) {
    case Command::simulate: return "simulate";
    case Command::infer: return "infer";
    case Command::summarize: return "summarize";
  }
  return "unknown";
}

/// Seed used by the paper-sec4 preset. Any seed gives a dataset of the same
/// kind; this one is fixed so the preset is reproducible.
inline constexpr std::uint64_t kPresetSeed = 1;

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"paper-sec4"};
  return names;
}

// ---------------------------------------------------------------------------
// Strict field access

class FieldReader {
 public:
  FieldReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ValidationError("field '" + display() + "': expected an object");
  }

  bool has(const std::string& key) const { return obj_.contains(key) && !obj_.at(key).is_null(); }

  double number(const std::string& key) {
    const auto& v = require(key);
    if (!v.is_number()) fail(key, "expected a number");
    return v.get<double>();
  }

  std::optional<double> optional_number(const std::string& key) {
    seen_.insert(key);
    if (!has(key)) return std::nullopt;
    return number(key);
  }

  std::uint64_t unsigned_integer(const std::string& key) {
    const auto& v = require(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return v.get<std::uint64_t>();
    fail(key, "expected a non-negative integer");
  }

  std::string string(const std::string& key) {
    const auto& v = require(key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }

  std::optional<std::string> optional_string(const std::string& key) {
    seen_.insert(key);
    if (!has(key)) return std::nullopt;
    return string(key);
  }

  std::vector<std::string> string_list(const std::string& key) {
    const auto& v = require(key);
    if (!v.is_array()) fail(key, "expected an array of strings");
    std::vector<std::string> out;
    for (const auto& e : v) {
      if (!e.is_string()) fail(key, "expected an array of strings");
      out.push_back(e.get<std::string>());
    }
    return out;
  }

  std::vector<double> number_list(const std::string& key) {
    const auto& v = require(key);
    if (!v.is_array()) fail(key, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) fail(key, "expected an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  FieldReader object(const std::string& key) { return FieldReader(require(key), child(key)); }

  /// Rejects keys that were never requested.
  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.count(key)) throw ValidationError("unknown field '" + child(key) + "'");
    }
  }

  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ValidationError("field '" + child(key) + "': " + what);
  }

 private:
  const json& require(const std::string& key) {
    seen_.insert(key);
    if (!has(key)) throw ValidationError("missing required field '" + child(key) + "'");
    return obj_.at(key);
  }

  std::string display() const { return path_.empty() ? "<root>" : path_; }

  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

// ---------------------------------------------------------------------------
// Typed configurations

struct InputSpec {
  std::string kind = "sinusoid";  // sinusoid | constant | tabulated
  SinusoidInput sinusoid;
  double value = 0.0;
  std::string file;

  InputSignal load() const {
    if (kind == "sinusoid") return InputSignal(sinusoid);
    if (kind == "constant") return InputSignal::constant(value);
    return InputSignal(io::read_input_csv(file));
  }
};

struct SimulateConfig {
  PhysicalParams model;
  double sigma = 0.0;
  std::size_t n = 0;
  std::size_t j = 0;
  std::size_t fine_factor = 20;  // Euler steps per lattice bin
  std::optional<double> S0;
  InputSpec input;
  std::uint64_t seed = 1;
  std::string out;
};

struct InferConfig {
  std::string observations;
  InputSpec input;
  double sigma = 0.0;
  std::size_t j = 0;
  MassConfig masses;
  IntegratorConfig integrator;
  std::size_t n_mc = 0;
  double K0 = 0.0;
  double gamma0 = 0.0;
  std::size_t chains = 1;
  std::uint64_t seed = 1;
  double discard = 0.0;
  std::size_t checkpoint_every = 0;
  std::string out;
};

struct SummarizeConfig {
  std::vector<std::string> chain_files;
  double discard = 0.0;
  std::optional<double> bandwidth;
  std::size_t grid_points = 512;
  std::string out;
};

// ---------------------------------------------------------------------------
// Layers

inline json base_defaults(Command c) {
  switch (c) {
    case Command::simulate:
      return {{"seed", 1}, {"fine_factor", 20}, {"out", "."}};
    case Command::infer:
      return {{"seed", 1},
              {"chains", 1},
              {"discard", 0.0},
              {"checkpoint_every", 0},
              {"masses", {{"M", 720.0}, {"m_prime", 130.0}, {"m_alpha", {150.0, 150.0}}}},
              {"integrator", {{"d_tau", 0.25}, {"P", 3}}},
              {"out", "."}};
    case Command::summarize:
      return {{"discard", 0.0}, {"grid_points", 512}, {"out", "."}};
  }
  return json::object();
}

inline json preset(const std::string& name, Command c) {
  if (name != "paper-sec4") throw ValidationError("unknown preset '" + name + "'");
  const json input = {{"kind", "sinusoid"}, {"amplitude", 1.0}, {"omega", 0.01}, {"offset", 0.1}};
  switch (c) {
    case Command::simulate:
      return {{"model", {{"K", 50.0}, {"gamma", 0.2}, {"T", 833.0}}},
              {"sigma", 0.1},
              {"n", 10},
              {"j", 30},
              {"input", input},
              {"seed", kPresetSeed}};
    case Command::infer:
      return {{"input", input},
              {"sigma", 0.1},
              {"j", 30},
              {"initial", {{"K", 200.0}, {"gamma", 0.5}}},
              {"n_mc", 50000},
              {"seed", kPresetSeed}};
    case Command::summarize:
      return json::object();
  }
  return json::object();
}

/// Later layers win. Objects merge recursively; anything else is replaced.
inline json resolve(Command c, const std::optional<std::string>& preset_name,
                    const std::optional<json>& file, const json& flags) {
  json out = base_defaults(c);
  if (preset_name) out.merge_patch(preset(*preset_name, c));
  if (file) {
    if (!file->is_object()) throw ValidationError("config file must hold a JSON object");
    json body = *file;
    if (body.contains("command")) {
      if (!body["command"].is_string() || body["command"].get<std::string>() != to_string(c)) {
        throw ValidationError(std::string("field 'command': config is not for '") + to_string(c) + "'");
      }
      body.erase("command");
    }
    out.merge_patch(body);
  }
  out.merge_patch(flags);
  out["command"] = to_string(c);
  return out;
}

// ---------------------------------------------------------------------------
// Parsing

inline std::size_t as_count(std::uint64_t v) { return static_cast<std::size_t>(v); }

inline InputSpec parse_input(FieldReader r) {
  InputSpec spec;
  spec.kind = r.string("kind");
  if (spec.kind == "sinusoid") {
    spec.sinusoid = {r.number("amplitude"), r.number("omega"), r.number("offset")};
  } else if (spec.kind == "constant") {
    spec.value = r.number("value");
    if (!(spec.value > 0.0)) r.fail("value", "must be positive");
  } else if (spec.kind == "tabulated") {
    spec.file = r.string("file");
  } else {
    r.fail("kind", "expected 'sinusoid', 'constant' or 'tabulated'");
  }
  r.finish();
  return spec;
}

inline void read_command(FieldReader& r) { (void)r.optional_string("command"); }

inline SimulateConfig parse_simulate(const json& doc) {
  FieldReader r(doc, "");
  read_command(r);
  SimulateConfig c;
  {
    auto m = r.object("model");
    c.model = {m.number("K"), m.number("gamma"), m.number("T")};
    if (!(c.model.K > 0.0)) m.fail("K", "must be positive");
    if (!(c.model.gamma > 0.0)) m.fail("gamma", "must be positive");
    if (!(c.model.T > 0.0)) m.fail("T", "must be positive");
    m.finish();
  }
  c.sigma = r.number("sigma");
  if (!(c.sigma > 0.0)) r.fail("sigma", "must be positive");
  c.n = as_count(r.unsigned_integer("n"));
  if (c.n < 1) r.fail("n", "must be >= 1");
  c.j = as_count(r.unsigned_integer("j"));
  if (c.j < 1) r.fail("j", "must be >= 1");
  c.fine_factor = as_count(r.unsigned_integer("fine_factor"));
  if (c.fine_factor < 1) r.fail("fine_factor", "must be >= 1");
  c.S0 = r.optional_number("S0");
  if (c.S0 && !(*c.S0 > 0.0)) r.fail("S0", "must be positive");
  c.input = parse_input(r.object("input"));
  c.seed = r.unsigned_integer("seed");
  c.out = r.string("out");
  r.finish();
  return c;
}

inline InferConfig parse_infer(const json& doc) {
  FieldReader r(doc, "");
  read_command(r);
  InferConfig c;
  c.observations = r.string("observations");
  c.input = parse_input(r.object("input"));
  c.sigma = r.number("sigma");
  if (!(c.sigma > 0.0)) r.fail("sigma", "must be positive");
  c.j = as_count(r.unsigned_integer("j"));
  if (c.j < 1) r.fail("j", "must be >= 1");
  {
    auto m = r.object("masses");
    c.masses.M = m.number("M");
    c.masses.m_prime = m.number("m_prime");
    const auto alpha = m.number_list("m_alpha");
    if (alpha.size() != 2) m.fail("m_alpha", "expected two entries (beta, gamma)");
    c.masses.m_alpha = {alpha[0], alpha[1]};
    if (!(c.masses.M > 0.0)) m.fail("M", "must be positive");
    if (!(c.masses.m_prime > 0.0)) m.fail("m_prime", "must be positive");
    if (!(alpha[0] > 0.0) || !(alpha[1] > 0.0)) m.fail("m_alpha", "entries must be positive");
    m.finish();
  }
  {
    auto g = r.object("integrator");
    c.integrator.d_tau = g.number("d_tau");
    c.integrator.P = as_count(g.unsigned_integer("P"));
    if (!(c.integrator.d_tau > 0.0)) g.fail("d_tau", "must be positive");
    if (c.integrator.P < 1) g.fail("P", "must be >= 1");
    g.finish();
  }
  c.n_mc = as_count(r.unsigned_integer("n_mc"));
  if (c.n_mc < 1) r.fail("n_mc", "must be >= 1");
  {
    auto init = r.object("initial");
    c.K0 = init.number("K");
    c.gamma0 = init.number("gamma");
    if (!(c.K0 > 0.0)) init.fail("K", "must be positive");
    if (!(c.gamma0 > 0.0)) init.fail("gamma", "must be positive");
    init.finish();
  }
  c.chains = as_count(r.unsigned_integer("chains"));
  if (c.chains < 1) r.fail("chains", "must be >= 1");
  c.seed = r.unsigned_integer("seed");
  c.discard = r.number("discard");
  if (!(c.discard >= 0.0 && c.discard < 1.0)) r.fail("discard", "must lie in [0, 1)");
  c.checkpoint_every = as_count(r.unsigned_integer("checkpoint_every"));
  c.out = r.string("out");
  r.finish();
  return c;
}

inline SummarizeConfig parse_summarize(const json& doc) {
  FieldReader r(doc, "");
  read_command(r);
  SummarizeConfig c;
  c.chain_files = r.string_list("chains");
  if (c.chain_files.empty()) r.fail("chains", "need at least one chain file");
  c.discard = r.number("discard");
  if (!(c.discard >= 0.0 && c.discard < 1.0)) r.fail("discard", "must lie in [0, 1)");
  c.bandwidth = r.optional_number("bandwidth");
  if (c.bandwidth && !(*c.bandwidth > 0.0)) r.fail("bandwidth", "must be positive");
  c.grid_points = as_count(r.unsigned_integer("grid_points"));
  if (c.grid_points < 2) r.fail("grid_points", "must be >= 2");
  c.out = r.string("out");
  r.finish();
  return c;
}

/// Initial dimensionless parameters for an inference run over window T.
inline DimensionlessParams initial_theta(const InferConfig& c, double T) {
  return to_dimensionless({c.K0, c.gamma0, T});
}

inline HmcConfig hmc_config(const InferConfig& c, double T) {
  HmcConfig h;
  h.n_mc = c.n_mc;
  h.masses = c.masses;
  h.integrator = c.integrator;
  h.seed = c.seed;
  h.theta0 = initial_theta(c, T);
  h.chains = c.chains;
  h.checkpoint_every = c.checkpoint_every;
  return h;
}

}  // namespace sdehmc::cli
