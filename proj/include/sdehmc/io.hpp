#pragma once

// CSV / JSON interchange:
//
//   observations   t,y
//   truth path     t,S,q
//   input signal   t,r
//   chain          iter,beta,gamma,K,accepted,H_before,H_after,dH
//   snapshot       index,u,q,p   (+ JSON header with theta, pi, layout)
//   density        x,density
//
// Doubles are written with 17 significant digits so files round-trip.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "sdehmc/diagnostics.hpp"
#include "sdehmc/lattice.hpp"
#include "sdehmc/model.hpp"
#include "sdehmc/sampler.hpp"

namespace sdehmc::io {

using json = nlohmann::json;

/// Missing or unreadable input file.
class FileError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  return out;
}

inline std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open '" + path.string() + "'");
  return in;
}

inline std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    while (!field.empty() && field.front() == ' ') field.erase(field.begin());
    out.push_back(field);
  }
  return out;
}

inline double parse_double(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError(where + ": cannot parse number '" + s + "'");
  }
}

/// Reads a numeric CSV with an exact header; returns rows of doubles.
inline std::vector<std::vector<double>> read_table(const std::filesystem::path& path,
                                                   const std::vector<std::string>& header) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path.string() + ": empty file");
  const auto got = split(line);
  if (got != header) {
    std::string want;
    for (std::size_t i = 0; i < header.size(); ++i) want += (i ? "," : "") + header[i];
    throw ValidationError(path.string() + ": expected header '" + want + "', got '" + line + "'");
  }
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto fields = split(line);
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (fields.size() != header.size()) {
      throw ValidationError(where + ": expected " + std::to_string(header.size()) + " fields");
    }
    std::vector<double> row(fields.size());
    for (std::size_t k = 0; k < fields.size(); ++k) row[k] = parse_double(fields[k], where);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace detail

inline void write_observations_csv(const std::filesystem::path& path, const TimeSeriesData& data) {
  auto out = detail::open_out(path);
  out << "t,y\n";
  for (std::size_t s = 0; s < data.size(); ++s) out << data.times[s] << ',' << data.values[s] << '\n';
}

inline TimeSeriesData read_observations_csv(const std::filesystem::path& path) {
  TimeSeriesData data;
  for (const auto& row : detail::read_table(path, {"t", "y"})) {
    data.times.push_back(row[0]);
    data.values.push_back(row[1]);
  }
  data.validate();
  return data;
}

inline void write_truth_csv(const std::filesystem::path& path, const TruthPath& truth) {
  auto out = detail::open_out(path);
  out << "t,S,q\n";
  for (std::size_t i = 0; i < truth.t.size(); ++i) {
    out << truth.t[i] << ',' << truth.S[i] << ',' << truth.q[i] << '\n';
  }
}

inline TruthPath read_truth_csv(const std::filesystem::path& path) {
  TruthPath truth;
  for (const auto& row : detail::read_table(path, {"t", "S", "q"})) {
    truth.t.push_back(row[0]);
    truth.S.push_back(row[1]);
    truth.q.push_back(row[2]);
  }
  return truth;
}

inline void write_input_csv(const std::filesystem::path& path, const TabulatedInput& input) {
  auto out = detail::open_out(path);
  out << "t,r\n";
  for (std::size_t i = 0; i < input.times.size(); ++i) out << input.times[i] << ',' << input.values[i] << '\n';
}

inline TabulatedInput read_input_csv(const std::filesystem::path& path) {
  TabulatedInput input;
  for (const auto& row : detail::read_table(path, {"t", "r"})) {
    input.times.push_back(row[0]);
    input.values.push_back(row[1]);
  }
  return input;
}

inline const std::vector<std::string>& chain_header() {
  static const std::vector<std::string> h{"iter", "beta", "gamma", "K", "accepted", "H_before", "H_after", "dH"};
  return h;
}

inline void write_chain_csv(const std::filesystem::path& path, const ChainRecord& record) {
  auto out = detail::open_out(path);
  const auto& h = chain_header();
  for (std::size_t k = 0; k < h.size(); ++k) out << (k ? "," : "") << h[k];
  out << '\n';
  for (const auto& r : record.rows) {
    out << r.iter << ',' << r.beta << ',' << r.gamma << ',' << r.K << ',' << (r.accepted ? 1 : 0)
        << ',' << r.h_before << ',' << r.h_after << ',' << r.dH << '\n';
  }
}

inline ChainRecord read_chain_csv(const std::filesystem::path& path) {
  ChainRecord record;
  for (const auto& row : detail::read_table(path, chain_header())) {
    ChainRow r;
    r.iter = static_cast<std::size_t>(row[0]);
    r.beta = row[1];
    r.gamma = row[2];
    r.K = row[3];
    r.accepted = row[4] != 0.0;
    r.h_before = row[5];
    r.h_after = row[6];
    r.dH = row[7];
    record.rows.push_back(r);
  }
  return record;
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  auto out = detail::open_out(path);
  out << j.dump(2) << '\n';
}

inline json read_json(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": invalid JSON: " + e.what());
  }
}

// Snapshot: CSV body plus a JSON header alongside (same stem, .json).

inline void write_snapshot(const std::filesystem::path& csv_path, const PolymerState& state,
                           const LatticeLayout& layout, std::size_t iteration, std::size_t chain) {
  const auto q = staging_inverse(state.u, layout);
  {
    auto out = detail::open_out(csv_path);
    out << "index,u,q,p\n";
    for (std::size_t i = 0; i < layout.N; ++i) {
      out << i << ',' << state.u[i] << ',' << q[i] << ',' << state.p[i] << '\n';
    }
  }
  json header{{"iteration", iteration}, {"chain", chain},
              {"beta", state.theta[kBeta]}, {"gamma", state.theta[kGamma]},
              {"pi_beta", state.pi[kBeta]}, {"pi_gamma", state.pi[kGamma]},
              {"n", layout.n}, {"j", layout.j}, {"T", layout.T}};
  auto json_path = csv_path;
  json_path.replace_extension(".json");
  auto out = detail::open_out(json_path);
  out << header.dump(2) << '\n';
}

struct Snapshot {
  PolymerState state;
  LatticeLayout layout;
  std::size_t iteration = 0;
  std::size_t chain = 0;
};

inline Snapshot read_snapshot(const std::filesystem::path& csv_path) {
  auto json_path = csv_path;
  json_path.replace_extension(".json");
  const auto header = read_json(json_path);
  Snapshot snap;
  try {
    snap.layout = build_layout(header.at("n").get<long>(), header.at("j").get<long>(),
                               header.at("T").get<double>());
    snap.iteration = header.at("iteration").get<std::size_t>();
    snap.chain = header.at("chain").get<std::size_t>();
    snap.state.theta = {header.at("beta").get<double>(), header.at("gamma").get<double>()};
    snap.state.pi = {header.at("pi_beta").get<double>(), header.at("pi_gamma").get<double>()};
  } catch (const json::exception& e) {
    throw ValidationError(json_path.string() + ": " + e.what());
  }
  const auto rows = detail::read_table(csv_path, {"index", "u", "q", "p"});
  if (rows.size() != snap.layout.N) {
    throw ValidationError(csv_path.string() + ": row count does not match the layout");
  }
  for (const auto& row : rows) {
    snap.state.u.push_back(row[1]);
    snap.state.p.push_back(row[3]);
  }
  return snap;
}

inline json to_json(const ParameterSummary& s) {
  return json{{"mean", s.mean}, {"sd", s.sd},   {"q025", s.q025}, {"q25", s.q25},
              {"q50", s.q50},   {"q75", s.q75}, {"q975", s.q975},
              {"ci95", {s.ci_low(), s.ci_high()}}, {"ess", s.ess}};
}

inline json to_json(const PosteriorSummary& s, double discard) {
  return json{{"retained", s.retained},
              {"chains", s.chains},
              {"discard", discard},
              {"acceptance_rate", s.acceptance_rate},
              {"parameters", {{"beta", to_json(s.beta)}, {"gamma", to_json(s.gamma)}, {"K", to_json(s.K)}}}};
}

inline void write_density_csv(const std::filesystem::path& path, const std::vector<double>& x,
                              const std::vector<double>& density) {
  auto out = detail::open_out(path);
  out << "x,density\n";
  for (std::size_t i = 0; i < x.size(); ++i) out << x[i] << ',' << density[i] << '\n';
}

}  // namespace sdehmc::io
