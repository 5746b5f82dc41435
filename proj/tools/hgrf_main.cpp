// SPDX-License-Identifier: Apache-2.0
// Command-line front end. Exit codes: 0 success, 1 usage or input error,
// 2 numerical failure.

#include "hgrf/app.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <functional>
#include <iostream>

namespace {

using namespace hgrf;

// Binds RunConfig flags to a subcommand; only flags given on the command
// line override the config file.
class ConfigFlags {
public:
  explicit ConfigFlags(CLI::App* app) {
    app->add_option("--config", config_file_, "key = value configuration file")->check(CLI::ExistingFile);
    bind(app, "--h0", v_.h0, &RunConfig::h0, "coarsest mesh size");
    bind(app, "--levels,-L", v_.L, &RunConfig::L, "finest level index L");
    bind(app, "--correlation-length", v_.correlation_length, &RunConfig::correlation_length,
         "Matern correlation length (kappa = 1/length)");
    bind(app, "--sigma2", v_.sigma2, &RunConfig::sigma2, "marginal variance");
    bind(app, "--sigma-eta2", v_.sigma_eta2, &RunConfig::sigma_eta2, "observation noise variance");
    bind(app, "--kl-modes", v_.kl_modes, &RunConfig::kl_modes, "KL truncation m");
    bind(app, "--beta", v_.beta, &RunConfig::beta, "pCN step size, one value or one per level");
    bind(app, "--subchain", v_.subchain, &RunConfig::subchain, "coarse steps per fine proposal");
    bind(app, "--chains", v_.n_chains, &RunConfig::n_chains, "number of chains");
    bind(app, "--samples", v_.n_samples, &RunConfig::n_samples, "fine-level samples per chain");
    bind(app, "--burnin", v_.burnin_fraction, &RunConfig::burnin_fraction, "burn-in fraction");
    bind(app, "--epsilon", v_.epsilon, &RunConfig::epsilon, "target tolerance for planning");
    bind(app, "--seed", v_.seed, &RunConfig::seed, "root seed");
    bind(app, "--output-dir,-o", v_.output_dir, &RunConfig::output_dir, "output directory");
    bind(app, "--observations", v_.observations, &RunConfig::observations, "observation file");
    bind(app, "--threads", v_.threads, &RunConfig::threads, "worker threads (0 = all)");
    auto* opt = app->add_option("--coarsest", coarsest_, "coarsest-level sampler: kl or spde")
                    ->check(CLI::IsMember({"kl", "spde"}));
    setters_.push_back([this, opt](RunConfig& c) {
      if (opt->count() > 0) c.coarsest_sampler = parse_coarsest_sampler(coarsest_);
    });
  }

  RunConfig resolve() const {
    RunConfig c = config_file_.empty() ? RunConfig{} : load_config(config_file_);
    for (const auto& s : setters_) s(c);
    c.validate();
    return c;
  }

private:
  template <class T>
  void bind(CLI::App* app, const std::string& name, T& slot, T RunConfig::*member,
            const std::string& help) {
    auto* opt = app->add_option(name, slot, help);
    setters_.push_back([opt, &slot, member](RunConfig& c) {
      if (opt->count() > 0) c.*member = slot;
    });
  }

  RunConfig v_;
  std::string config_file_;
  std::string coarsest_;
  std::vector<std::function<void(RunConfig&)>> setters_;
};

void print_summary(const RunSummary& s) {
  std::cout << "level  acceptance  mean|Y|       var(Y)        IACT      ESS       cost[s]    planned_N\n";
  for (std::size_t l = 0; l < s.levels.size(); ++l) {
    const auto& L = s.levels[l];
    std::printf("%5zu  %10.4f  %12.5e  %12.5e  %8.2f  %8.1f  %9.3e  %9llu\n", l, L.acceptance,
                L.mean_absY, L.var_Y, L.iact, L.ess, L.cost_per_sample,
                static_cast<unsigned long long>(l < s.planned_N.size() ? s.planned_N[l] : 0));
  }
  std::printf("multilevel estimate %.6f (sd over chains %.2e), predicted cost %.3e s at eps=%g\n",
              s.ml_estimate, s.ml_estimate_sd, s.predicted_total_cost, s.epsilon);
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical Gaussian random fields and multilevel MCMC for Darcy flow"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("generate-observations", "synthesize the observation file");
  ConfigFlags gen_flags(gen);
  std::optional<std::uint64_t> obs_seed;
  std::optional<double> noise_sigma;
  gen->add_option("--obs-seed", obs_seed, "seed of the reference field (default: --seed)");
  gen->add_option("--noise-sigma", noise_sigma, "override the observation noise std (0 = noiseless)");

  auto* grf = app.add_subcommand("sample-grf", "write field realizations");
  ConfigFlags grf_flags(grf);
  std::string sampler = "spde";
  SampleGrfOptions grf_opt;
  grf->add_option("--sampler", sampler, "kl or spde")->check(CLI::IsMember({"kl", "spde"}));
  grf->add_option("--level", grf_opt.level, "level to sample on");
  grf->add_option("--count", grf_opt.count, "number of realizations");

  auto* runc = app.add_subcommand("run", "run the multilevel sampler");
  ConfigFlags run_flags(runc);

  auto* diag = app.add_subcommand("diagnostics", "post-process a run directory");
  std::string run_dir;
  DiagnosticsOptions diag_opt;
  diag->add_option("run_dir", run_dir, "run directory")->required();
  diag->add_option("--max-lag", diag_opt.max_lag, "largest ACF lag");

  auto* val = app.add_subcommand("validate", "identity and solver self-checks");
  ValidateOptions val_opt;
  std::string val_out;
  val->add_flag("--lumped-mass", val_opt.lumped_mass, "use lumped mass matrices");
  val->add_option("--out", val_out, "also write the report to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*gen) {
      const RunConfig c = gen_flags.resolve();
      const auto g = generate_observations(c, obs_seed.value_or(c.seed), noise_sigma);
      write_observations(c.observations_path(), g, c);
      std::cout << "wrote " << c.observations_path().string() << " (reference h = " << g.obs.reference_h
                << ", Q_ref = " << g.reference_qoi << ")\n";
    } else if (*grf) {
      const RunConfig c = grf_flags.resolve();
      grf_opt.sampler = parse_coarsest_sampler(sampler);
      for (const auto& p : sample_grf(c, grf_opt)) std::cout << "wrote " << p.string() << '\n';
    } else if (*runc) {
      const RunConfig c = run_flags.resolve();
      const RunReport r = run(c);
      if (r.skipped) std::cout << "identical completed run found in " << r.dir.string() << "; skipped\n";
      if (r.dry_run) {
        std::cout << "dry run; configuration:\n" << serialize(c);
        return 0;
      }
      for (const auto& f : r.failed_chains) std::cerr << "failed: " << f << '\n';
      if (r.summary) print_summary(*r.summary);
    } else if (*diag) {
      const auto j = diagnostics(run_dir, diag_opt);
      std::cout << "wrote " << (std::filesystem::path(run_dir) / "diagnostics").string() << '\n';
      print_summary(summary_from_json(j));
    } else if (*val) {
      const auto j = validate(val_opt);
      std::cout << j.dump(2) << '\n';
      if (!val_out.empty()) {
        std::ofstream out(val_out);
        if (!out) throw IoError("cannot write " + val_out);
        out << j.dump(2) << '\n';
      }
      return j.at("all_pass").get<bool>() ? 0 : 2;
    }
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
