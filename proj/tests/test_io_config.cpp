#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "sdehmc/commands.hpp"
#include "sdehmc/config.hpp"
#include "sdehmc/io.hpp"
#include "support/oracles.hpp"

using namespace sdehmc;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("sdehmc_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Csv, ObservationsRoundTripExactly) {
  const auto dir = scratch_dir("obs");
  const auto data = oracle::reference_dataset();
  io::write_observations_csv(dir / "obs.csv", data);
  const auto back = io::read_observations_csv(dir / "obs.csv");
  EXPECT_EQ(back.times, data.times);
  EXPECT_EQ(back.values, data.values);
}

TEST(Csv, TruthAndInputRoundTrip) {
  const auto dir = scratch_dir("truth");
  auto rng = make_rng(3);
  const auto path = simulate_truth({50.0, 0.2, 833.0}, oracle::reference_input(), SimulationGrid{300, 3},
                                   std::nullopt, rng);
  io::write_truth_csv(dir / "truth.csv", path);
  const auto back = io::read_truth_csv(dir / "truth.csv");
  EXPECT_EQ(back.t, path.t);
  EXPECT_EQ(back.S, path.S);
  EXPECT_EQ(back.q, path.q);

  const TabulatedInput tab{{0.0, 1.5, 3.0}, {0.1, 0.7, 0.2}};
  io::write_input_csv(dir / "r.csv", tab);
  const auto tb = io::read_input_csv(dir / "r.csv");
  EXPECT_EQ(tb.times, tab.times);
  EXPECT_EQ(tb.values, tab.values);
}

TEST(Csv, ChainRoundTripExactly) {
  const auto dir = scratch_dir("chain");
  HmcConfig cfg;
  cfg.n_mc = 50;
  cfg.theta0 = to_dimensionless({200.0, 0.5, 833.0});
  const auto rec = run_chain(oracle::reference_posterior(30), cfg);
  io::write_chain_csv(dir / "c.csv", rec);
  const auto back = io::read_chain_csv(dir / "c.csv");
  ASSERT_EQ(back.rows.size(), rec.rows.size());
  for (std::size_t i = 0; i < rec.rows.size(); ++i) {
    EXPECT_EQ(back.rows[i].iter, rec.rows[i].iter);
    EXPECT_EQ(back.rows[i].beta, rec.rows[i].beta);
    EXPECT_EQ(back.rows[i].K, rec.rows[i].K);
    EXPECT_EQ(back.rows[i].accepted, rec.rows[i].accepted);
    EXPECT_EQ(back.rows[i].dH, rec.rows[i].dH);
  }
}

TEST(Csv, BadFilesAreValidationErrors) {
  const auto dir = scratch_dir("bad");
  EXPECT_THROW(io::read_observations_csv(dir / "missing.csv"), io::FileError);
  write_text(dir / "hdr.csv", "time,y\n0,1\n1,2\n");
  EXPECT_NE(error_of([&] { io::read_observations_csv(dir / "hdr.csv"); }).find("expected header"), std::string::npos);
  write_text(dir / "num.csv", "t,y\n0,1\n1,abc\n");
  EXPECT_NE(error_of([&] { io::read_observations_csv(dir / "num.csv"); }).find(":3"), std::string::npos);
  write_text(dir / "width.csv", "t,y\n0,1,2\n");
  EXPECT_THROW(io::read_observations_csv(dir / "width.csv"), ValidationError);
  write_text(dir / "neg.csv", "t,y\n0,1\n1,-2\n");
  EXPECT_THROW(io::read_observations_csv(dir / "neg.csv"), ValidationError);
  write_text(dir / "chain.csv", "iter,beta,gamma\n0,1,2\n");
  EXPECT_THROW(io::read_chain_csv(dir / "chain.csv"), ValidationError);
  write_text(dir / "bad.json", "{ not json");
  EXPECT_THROW(io::read_json(dir / "bad.json"), ValidationError);
}

TEST(Snapshot, RoundTrip) {
  const auto dir = scratch_dir("snap");
  const auto post = oracle::reference_posterior(30);
  oracle::Gen g(81);
  const auto s = oracle::random_state(post, g);
  io::write_snapshot(dir / "cp.csv", s, post.layout(), 40, 2);
  ASSERT_TRUE(fs::exists(dir / "cp.json"));
  const auto snap = io::read_snapshot(dir / "cp.csv");
  EXPECT_EQ(snap.state.u, s.u);
  EXPECT_EQ(snap.state.p, s.p);
  EXPECT_EQ(snap.state.theta, s.theta);
  EXPECT_EQ(snap.state.pi, s.pi);
  EXPECT_EQ(snap.iteration, 40u);
  EXPECT_EQ(snap.chain, 2u);
  EXPECT_EQ(snap.layout.N, 301u);
}

TEST(Config, PresetContents) {
  const auto sim = cli::parse_simulate(cli::resolve(cli::Command::simulate, "paper-sec4", std::nullopt, json::object()));
  EXPECT_DOUBLE_EQ(sim.model.K, 50.0);
  EXPECT_DOUBLE_EQ(sim.model.gamma, 0.2);
  EXPECT_DOUBLE_EQ(sim.model.T, 833.0);
  EXPECT_DOUBLE_EQ(sim.sigma, 0.1);
  EXPECT_EQ(sim.n, 10u);
  EXPECT_EQ(sim.j, 30u);
  EXPECT_EQ(sim.input.kind, "sinusoid");
  EXPECT_DOUBLE_EQ(sim.input.sinusoid.omega, 0.01);
  EXPECT_EQ(sim.seed, cli::kPresetSeed);

  json flags{{"observations", "x.csv"}};
  const auto inf = cli::parse_infer(cli::resolve(cli::Command::infer, "paper-sec4", std::nullopt, flags));
  EXPECT_DOUBLE_EQ(inf.masses.M, 720.0);
  EXPECT_DOUBLE_EQ(inf.masses.m_prime, 130.0);
  EXPECT_DOUBLE_EQ(inf.masses.m_alpha[0], 150.0);
  EXPECT_DOUBLE_EQ(inf.integrator.d_tau, 0.25);
  EXPECT_EQ(inf.integrator.P, 3u);
  EXPECT_DOUBLE_EQ(inf.K0, 200.0);
  EXPECT_DOUBLE_EQ(inf.gamma0, 0.5);
  EXPECT_EQ(inf.n_mc, 50000u);
  EXPECT_EQ(inf.chains, 1u);
  EXPECT_DOUBLE_EQ(inf.discard, 0.0);
  EXPECT_NEAR(cli::initial_theta(inf, 833.0).beta, 1.44309, 1e-5);

  EXPECT_THROW(cli::preset("nope", cli::Command::simulate), ValidationError);
}

TEST(Config, LayersOverrideInOrder) {
  const json file{{"seed", 11}, {"n_mc", 10}, {"masses", {{"M", 100.0}}}};
  const json flags{{"seed", 12}, {"observations", "o.csv"}};
  const auto doc = cli::resolve(cli::Command::infer, "paper-sec4", file, flags);
  const auto c = cli::parse_infer(doc);
  EXPECT_EQ(c.seed, 12u);
  EXPECT_EQ(c.n_mc, 10u);
  EXPECT_DOUBLE_EQ(c.masses.M, 100.0);
  EXPECT_DOUBLE_EQ(c.masses.m_prime, 130.0);  // sibling keys survive the merge
  EXPECT_EQ(doc.at("command"), "infer");
}

TEST(Config, ErrorsNameTheField) {
  const auto base = cli::resolve(cli::Command::simulate, "paper-sec4", std::nullopt, json::object());
  auto with = [&](const json& patch) {
    json d = base;
    d.merge_patch(patch);
    return error_of([&] { cli::parse_simulate(d); });
  };
  EXPECT_NE(with({{"n", 0}}).find("'n'"), std::string::npos);
  EXPECT_NE(with({{"n", -3}}).find("'n'"), std::string::npos);
  EXPECT_NE(with({{"sigma", "big"}}).find("'sigma'"), std::string::npos);
  EXPECT_NE(with({{"model", {{"K", -1.0}}}}).find("'model.K'"), std::string::npos);
  EXPECT_NE(with({{"model", {{"Kay", 1.0}}}}).find("unknown field 'model.Kay'"), std::string::npos);
  EXPECT_NE(with({{"bogus", 1}}).find("unknown field 'bogus'"), std::string::npos);
  EXPECT_NE(with({{"input", {{"kind", "square"}}}}).find("'input.kind'"), std::string::npos);

  const auto bare = cli::resolve(cli::Command::simulate, std::nullopt, std::nullopt, json::object());
  EXPECT_NE(error_of([&] { cli::parse_simulate(bare); }).find("missing required field 'model'"),
            std::string::npos);

  const auto inf = cli::resolve(cli::Command::infer, "paper-sec4", std::nullopt, json{{"observations", "o"}});
  auto infer_with = [&](const json& patch) {
    json d = inf;
    d.merge_patch(patch);
    return error_of([&] { cli::parse_infer(d); });
  };
  EXPECT_NE(infer_with({{"masses", {{"M", 0.0}}}}).find("'masses.M'"), std::string::npos);
  EXPECT_NE(infer_with({{"masses", {{"m_alpha", {1.0}}}}}).find("'masses.m_alpha'"), std::string::npos);
  EXPECT_NE(infer_with({{"chains", 0}}).find("'chains'"), std::string::npos);
  EXPECT_NE(infer_with({{"discard", 1.0}}).find("'discard'"), std::string::npos);
  EXPECT_NE(infer_with({{"integrator", {{"P", 0}}}}).find("'integrator.P'"), std::string::npos);

  EXPECT_THROW(cli::resolve(cli::Command::infer, std::nullopt, json{{"command", "simulate"}}, json::object()),
               ValidationError);
  EXPECT_THROW(cli::resolve(cli::Command::infer, std::nullopt, json::array(), json::object()), ValidationError);
}

TEST(Commands, SimulateThenInferRoundTrip) {
  const auto dir = scratch_dir("cmd");
  const auto sim_doc = cli::resolve(cli::Command::simulate, "paper-sec4", std::nullopt,
                                    json{{"out", (dir / "data").string()}});
  const auto sim = cli::cmd_simulate(sim_doc);

  // the preset reproduces the reference dataset
  const auto ref = oracle::reference_dataset(cli::kPresetSeed);
  EXPECT_EQ(sim.data.values, ref.values);
  EXPECT_EQ(io::read_json(dir / "data" / "config.json"), sim_doc);

  const auto inf_doc = cli::resolve(
      cli::Command::infer, "paper-sec4", std::nullopt,
      json{{"observations", (dir / "data" / "observations.csv").string()}, {"n_mc", 60},
           {"checkpoint_every", 20}, {"out", (dir / "run").string()}});
  const auto inf = cli::cmd_infer(inf_doc);
  ASSERT_TRUE(inf.summary.has_value());

  // re-reading the file gives the same posterior object as the in-memory data
  const PathPosterior direct(ref, oracle::reference_input(), 0.1, 30, MassConfig{});
  auto cfg = cli::hmc_config(cli::parse_infer(inf_doc), 833.0);
  const auto rec = run_chain(direct, cfg);
  ASSERT_EQ(rec.rows.size(), inf.chains[0].rows.size());
  for (std::size_t i = 0; i < rec.rows.size(); ++i) EXPECT_EQ(rec.rows[i].beta, inf.chains[0].rows[i].beta);

  EXPECT_TRUE(fs::exists(dir / "run" / "chain_0.csv"));
  EXPECT_TRUE(fs::exists(dir / "run" / "chain_0.json"));
  EXPECT_TRUE(fs::exists(dir / "run" / "summary.json"));
  const auto snap = io::read_snapshot(dir / "run" / cli::checkpoint_file_name(0));
  EXPECT_EQ(snap.iteration, 60u);

  // summarize on the single chain reproduces the inline summary
  const auto sum_doc = cli::resolve(cli::Command::summarize, std::nullopt, std::nullopt,
                                    json{{"chains", {(dir / "run" / "chain_0.csv").string()}},
                                         {"out", (dir / "sum").string()}});
  cli::cmd_summarize(sum_doc);
  EXPECT_EQ(io::read_json(dir / "sum" / "summary.json"), io::read_json(dir / "run" / "summary.json"));
}

TEST(Commands, SummarizeDiscardAndDensities) {
  const auto dir = scratch_dir("sum");
  HmcConfig cfg;
  cfg.n_mc = 200;
  cfg.theta0 = to_dimensionless({200.0, 0.5, 833.0});
  io::write_chain_csv(dir / "a.csv", run_chain(oracle::reference_posterior(30), cfg));
  const auto doc = cli::resolve(cli::Command::summarize, std::nullopt, std::nullopt,
                                json{{"chains", {(dir / "a.csv").string(), (dir / "a.csv").string()}},
                                     {"discard", 0.5}, {"out", (dir / "out").string()}});
  const auto res = cli::cmd_summarize(doc);
  EXPECT_EQ(res.summary.retained, 200u);
  EXPECT_EQ(res.summary.chains, 2u);
  EXPECT_EQ(res.density_files.size(), 3u);
  EXPECT_TRUE(fs::exists(dir / "out" / "density_K.csv"));

  write_text(dir / "other.csv", "iter,beta,gamma,K\n0,1,1,1\n");
  const auto bad = cli::resolve(cli::Command::summarize, std::nullopt, std::nullopt,
                                json{{"chains", {(dir / "a.csv").string(), (dir / "other.csv").string()}},
                                     {"out", (dir / "out2").string()}});
  EXPECT_THROW(cli::cmd_summarize(bad), ValidationError);
}
