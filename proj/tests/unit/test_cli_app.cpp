// SPDX-License-Identifier: Apache-2.0
#include "hgrf/app.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace hgrf;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hgrf_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

RunConfig small_config(const fs::path& dir) {
  RunConfig c;
  c.h0 = 0.25;
  c.L = 1;
  c.kl_modes = 5;
  c.n_chains = 2;
  c.n_samples = 150;
  c.burnin_fraction = 0.0;
  c.beta = {0.5};
  c.output_dir = dir.string();
  c.threads = 1;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(const std::string& args) {
  const std::string cmd = std::string(HGRF_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

} // namespace

TEST(Config, DefaultsRoundTrip) {
  RunConfig c;
  c.beta = {0.1, 0.2, 0.3};
  c.subchain = {2, 3};
  c.coarsest_sampler = CoarsestSampler::Spde;
  c.observations = "obs.json";
  const RunConfig d = parse_config(serialize(c));
  EXPECT_EQ(serialize(d), serialize(c));
  EXPECT_EQ(d.beta, c.beta);
  EXPECT_EQ(d.coarsest_sampler, CoarsestSampler::Spde);
  EXPECT_NO_THROW(d.validate());
}

TEST(Config, DefaultValues) {
  const RunConfig c;
  EXPECT_EQ(c.h0, 0.1);
  EXPECT_EQ(c.L, 2);
  EXPECT_NEAR(c.kappa(), 1.0 / 0.3, 1e-15);
  EXPECT_NEAR(c.sigma(), std::sqrt(0.1), 1e-15);
  EXPECT_EQ(c.coarsest_sampler, CoarsestSampler::Kl);
  EXPECT_EQ(c.kl_modes, 50);
  EXPECT_EQ(c.observations_path(), fs::path("run") / "observations.json");
}

TEST(Config, CommentsAndOverrides) {
  const RunConfig c = parse_config("# a run\nL = 3   # finer\n\nbeta = 0.1, 0.2,0.3,0.4\n");
  EXPECT_EQ(c.L, 3);
  EXPECT_EQ(c.beta.size(), 4u);
  EXPECT_EQ(c.h0, 0.1);
}

TEST(Config, ParseErrors) {
  EXPECT_THROW(parse_config("L 3"), InvalidArgument);
  EXPECT_THROW(parse_config("levels = 3"), InvalidArgument);
  EXPECT_THROW(parse_config("L = three"), InvalidArgument);
  EXPECT_THROW(parse_config("h0 = 0.1x"), InvalidArgument);
  EXPECT_THROW(parse_config("beta = 0.1,,0.2"), InvalidArgument);
  EXPECT_THROW(parse_config("coarsest_sampler = pce"), InvalidArgument);
  EXPECT_THROW(load_config("/nonexistent/hgrf.cfg"), IoError);
}

TEST(Config, ValidationErrors) {
  auto bad = [](const std::string& text) { return parse_config(text).validate(); };
  EXPECT_THROW(bad("h0 = 0.3"), InvalidArgument);
  EXPECT_THROW(bad("nu = 2"), InvalidArgument);
  EXPECT_THROW(bad("beta = 0"), InvalidArgument);
  EXPECT_THROW(bad("beta = 0.1,0.2"), InvalidArgument);
  EXPECT_THROW(bad("subchain = 0"), InvalidArgument);
  EXPECT_THROW(bad("sigma2 = -1"), InvalidArgument);
  EXPECT_THROW(bad("burnin_fraction = 1"), InvalidArgument);
  EXPECT_THROW(bad("n_chains = 0"), InvalidArgument);
  EXPECT_THROW(bad("kl_modes = 0"), InvalidArgument);
}

TEST(Config, HashIgnoresLocationOnly) {
  RunConfig a, b;
  b.output_dir = "elsewhere";
  b.threads = 7;
  b.observations = "x.json";
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.seed += 1;
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_EQ(hex(0xabcull), "0000000000000abc");
  EXPECT_EQ(provenance(a).rfind("seed=20240601 config_hash=" + hex(config_hash(a)), 0), 0u);
}

TEST(Observations, ReferenceMeshAndDeterminism) {
  const RunConfig c = small_config(scratch("obs"));
  const auto a = generate_observations(c, 5);
  const auto b = generate_observations(c, 5);
  const auto d = generate_observations(c, 6);
  EXPECT_DOUBLE_EQ(a.obs.reference_h, 0.25 / 4.0);
  EXPECT_EQ(a.obs.values.size(), 100);
  EXPECT_EQ(a.obs.values, b.obs.values);
  EXPECT_NE(a.obs.values, d.obs.values);
  EXPECT_NEAR(a.obs.sigma_eta, 0.1, 1e-15);
  EXPECT_GT(a.reference_qoi, 0.0);
}

TEST(Observations, ZeroNoiseIsTheNoiselessSolve) {
  const RunConfig c = small_config(scratch("obs0"));
  const auto g = generate_observations(c, 5, 0.0);
  // independent route: same field stream, direct solve on the reference mesh
  const MeshLevel mesh = make_unit_square(16, 2);
  const SpdeOperators ops = assemble_spde_operator(mesh, c.kappa(), c.nu, c.sigma());
  Engine eng = make_engine({5, 0, 2, 0, StreamPurpose::Field});
  const Vector theta = spde_sample(ops, standard_normal(ops.size(), eng)).theta;
  const DarcySolution sol = solve_darcy(mesh, project_permeability(mesh, theta));
  const Vector y = observe(sol, mesh, observation_lattice());
  EXPECT_LE((g.obs.values - y).cwiseAbs().maxCoeff(), 1e-12);
  const auto noisy = generate_observations(c, 5);
  const double rms = std::sqrt((noisy.obs.values - y).squaredNorm() / 100.0);
  EXPECT_GT(rms, 0.05);
  EXPECT_LT(rms, 0.2);
  EXPECT_THROW(generate_observations(c, 5, -1.0), InvalidArgument);
}

TEST(Observations, FileRoundTripAndErrors) {
  const fs::path dir = scratch("obsio");
  const RunConfig c = small_config(dir);
  const auto g = generate_observations(c, 3);
  write_observations(c.observations_path(), g, c);
  const ObservationSet o = read_observations(c.observations_path());
  EXPECT_EQ(o.values, g.obs.values);
  EXPECT_EQ(o.points.size(), 100u);
  EXPECT_EQ(o.seed, 3u);
  const auto j = nlohmann::json::parse(slurp(c.observations_path()));
  EXPECT_EQ(j.at("config_hash").get<std::string>(), hex(config_hash(c)));
  EXPECT_THROW(read_observations(dir / "missing.json"), IoError);
  std::ofstream(dir / "broken.json") << "{ not json";
  EXPECT_THROW(read_observations(dir / "broken.json"), InvalidArgument);
  nlohmann::json k = j;
  k["points"][0] = {1.5, 0.5};
  EXPECT_THROW(observations_from_json(k), InvalidArgument);
  k = j;
  k["values"].erase(0);
  EXPECT_THROW(observations_from_json(k), InvalidArgument);
}

TEST(SampleGrf, WritesRealizationsWithProvenance) {
  const fs::path dir = scratch("grf");
  const RunConfig c = small_config(dir);
  const auto files = sample_grf(c, {CoarsestSampler::Kl, 1, 3});
  ASSERT_EQ(files.size(), 3u);
  EXPECT_EQ(files[2].filename(), "grf_kl_level1_2.csv");
  const std::string s = slurp(files[0]);
  EXPECT_NE(s.find("seed=20240601"), std::string::npos);
  EXPECT_NE(s.find("config_hash=" + hex(config_hash(c))), std::string::npos);
  EXPECT_NE(slurp(files[0]), slurp(files[1]));
  EXPECT_THROW(sample_grf(c, {CoarsestSampler::Kl, 2, 1}), InvalidArgument);
  EXPECT_THROW(sample_grf(c, {CoarsestSampler::Kl, 0, 0}), InvalidArgument);
}

TEST(Run, DryRunWritesConfigOnly) {
  const fs::path dir = scratch("dry");
  RunConfig c = small_config(dir);
  write_observations(c.observations_path(), generate_observations(c, 1), c);
  c.n_samples = 0;
  const RunReport r = run(c);
  EXPECT_TRUE(r.dry_run);
  EXPECT_TRUE(fs::exists(dir / "config.txt"));
  EXPECT_FALSE(fs::exists(dir / "summary.json"));
  EXPECT_EQ(serialize(load_config(dir / "config.txt")), serialize(c));
}

TEST(Run, MissingObservationsIsIoError) {
  const RunConfig c = small_config(scratch("noobs"));
  EXPECT_THROW(run(c), IoError);
}

TEST(Run, CompletesResumesAndDiagnoses) {
  const fs::path dir = scratch("run");
  const RunConfig c = small_config(dir);
  write_observations(c.observations_path(), generate_observations(c, 1), c);
  const RunReport r = run(c);
  ASSERT_TRUE(r.summarized);
  EXPECT_FALSE(r.skipped);
  EXPECT_TRUE(r.failed_chains.empty());
  for (const char* f : {"chain_0_level_0.csv", "chain_1_level_1.csv", "posterior_field_level_1.csv",
                        "posterior_pressure_level_0.csv", "summary.json", "config.txt"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  const auto j = nlohmann::json::parse(slurp(dir / "summary.json"));
  EXPECT_EQ(j.at("config_hash").get<std::string>(), hex(config_hash(c)));
  EXPECT_EQ(j.at("chains").get<int>(), 2);
  EXPECT_EQ(j.at("coarsest_sampler").get<std::string>(), "kl");
  EXPECT_NE(slurp(dir / "chain_0_level_1.csv").find("config_hash="), std::string::npos);

  const auto t0 = fs::last_write_time(dir / "chain_0_level_0.csv");
  const RunReport again = run(c);
  EXPECT_TRUE(again.skipped);
  EXPECT_EQ(fs::last_write_time(dir / "chain_0_level_0.csv"), t0);
  EXPECT_EQ(again.summary->ml_estimate, r.summary->ml_estimate);

  const auto d = diagnostics(dir);
  for (const char* f : {"acf_level0_Q.csv", "acf_level1_Y.csv", "acceptance.csv", "decay.csv",
                        "planned_N.csv", "diagnostics.json"})
    EXPECT_TRUE(fs::exists(dir / "diagnostics" / f)) << f;
  EXPECT_EQ(d.at("iact_Q").size(), 2u);
  EXPECT_NEAR(d.at("ml_estimate").get<double>(), r.summary->ml_estimate, 1e-12);
  const std::string acc = slurp(dir / "diagnostics" / "acceptance.csv");
  EXPECT_NE(acc.find("level,acceptance,acceptance_sd"), std::string::npos);

  fs::remove(dir / "chain_1_level_0.csv");
  fs::remove(dir / "chain_0_level_1.csv");
  try {
    diagnostics(dir);
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    const std::string m = e.what();
    EXPECT_NE(m.find("chain_1_level_0.csv"), std::string::npos);
    EXPECT_NE(m.find("chain_0_level_1.csv"), std::string::npos);
  }
  EXPECT_THROW(diagnostics(dir / "nope"), IoError);
}

TEST(Validate, ConsistentMassPassesLumpedFails) {
  const auto ok = validate();
  EXPECT_TRUE(ok.at("all_pass").get<bool>());
  EXPECT_GE(ok.at("checks").size(), 10u);
  for (const auto& c : ok.at("checks")) EXPECT_TRUE(c.at("pass").get<bool>()) << c.dump();
  const auto lumped = validate({true});
  EXPECT_FALSE(lumped.at("all_pass").get<bool>());
  EXPECT_EQ(lumped.at("mass").get<std::string>(), "lumped");
}

TEST(Executable, ExitCodes) {
  const fs::path dir = scratch("exe");
  EXPECT_EQ(cli("validate --out " + (dir / "v.json").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "v.json"));
  EXPECT_EQ(cli("validate --lumped-mass"), 2);
  EXPECT_EQ(cli("frobnicate"), 1);
  EXPECT_EQ(cli("run --beta 1.5 -o " + dir.string()), 1);
  EXPECT_EQ(cli("diagnostics " + (dir / "missing").string()), 1);
  EXPECT_EQ(cli("run --config /nonexistent.cfg"), 1);
  EXPECT_EQ(cli("generate-observations --h0 0.25 -L 1 -o " + dir.string()), 0);
  EXPECT_TRUE(fs::exists(dir / "observations.json"));
  EXPECT_EQ(cli("run --h0 0.25 -L 1 --samples 0 -o " + dir.string()), 0);
  EXPECT_TRUE(fs::exists(dir / "config.txt"));
  EXPECT_EQ(cli("sample-grf --h0 0.25 -L 1 --sampler kl --kl-modes 4 --count 2 -o " + dir.string()), 0);
  EXPECT_TRUE(fs::exists(dir / "grf_kl_level0_1.csv"));
}
