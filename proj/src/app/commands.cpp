// SPDX-License-Identifier: Apache-2.0
#include "hgrf/app.hpp"

#include <cmath>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;

namespace hgrf {
namespace {

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw IoError("cannot write " + p.string());
  return out;
}

fs::path chain_file(const fs::path& dir, int chain, int level) {
  return dir / ("chain_" + std::to_string(chain) + "_level_" + std::to_string(level) + ".csv");
}

void write_json(const fs::path& p, const nlohmann::json& j) {
  auto out = open_out(p);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed for " + p.string());
}

} // namespace

std::vector<fs::path> sample_grf(const RunConfig& c, const SampleGrfOptions& o) {
  c.validate();
  if (o.level < 0 || o.level > c.L)
    throw InvalidArgument("sample-grf: level must lie in [0, L]");
  if (o.count < 1) throw InvalidArgument("sample-grf: count must be >= 1");
  const Hierarchy hier = build_hierarchy(c.h0, c.L);
  const auto ops = assemble_spde_hierarchy(hier, c.kappa(), c.nu, c.sigma());
  const MultilevelSampler smp(hier, ops, o.sampler, c.kl_modes);
  fs::create_directories(c.output_dir);

  std::vector<fs::path> written;
  for (int i = 0; i < o.count; ++i) {
    Engine eng = make_engine({c.seed, static_cast<std::uint64_t>(i),
                              static_cast<std::uint64_t>(o.level), 0, StreamPurpose::Field});
    const auto noise = smp.sample_noise(o.level, eng);
    const FieldRealization f = smp.field(o.level, noise);
    const fs::path p = fs::path(c.output_dir) / ("grf_" + std::string(to_string(o.sampler)) +
                                                 "_level" + std::to_string(o.level) + "_" +
                                                 std::to_string(i) + ".csv");
    auto out = open_out(p);
    write_field_csv(out, hier.levels[static_cast<std::size_t>(o.level)], f.theta,
                    provenance(c, "sampler=" + std::string(to_string(o.sampler)) +
                                      " realization=" + std::to_string(i)));
    written.push_back(p);
  }
  return written;
}

RunReport run(const RunConfig& c) {
  c.validate();
  RunReport rep;
  rep.dir = c.output_dir;
  fs::create_directories(rep.dir);
  const std::string hash = hex(config_hash(c));

  const fs::path summary_path = rep.dir / "summary.json";
  if (fs::exists(summary_path)) {
    std::ifstream in(summary_path);
    nlohmann::json j;
    try {
      in >> j;
      if (j.value("config_hash", "") == hash) {
        rep.skipped = true;
        rep.summarized = true;
        rep.summary = summary_from_json(j);
        return rep;
      }
    } catch (const nlohmann::json::exception&) {
      // unreadable summary: recompute
    }
  }

  ObservationSet obs = read_observations(c.observations_path());
  obs.sigma_eta = std::sqrt(c.sigma_eta2);

  {
    auto out = open_out(rep.dir / "config.txt");
    out << "# " << provenance(c) << '\n' << serialize(c);
  }
  if (c.n_samples == 0) {
    rep.dry_run = true;
    return rep;
  }

  const auto setup = make_darcy_setup(darcy_problem(c), std::move(obs));
  ChainConfig cc;
  cc.finest = c.L;
  cc.beta = c.beta;
  cc.subchain = c.L > 0 ? c.subchain : std::vector<int>{};
  cc.burnin_fraction = c.burnin_fraction;
  cc.seed = c.seed;
  cc.track_means = true;
  const auto records = run_chains(
      [&] { return std::make_unique<DarcyPosterior>(setup, true); }, cc, c.n_chains, c.n_samples,
      c.threads);

  nlohmann::json aborted = nlohmann::json::array();
  std::vector<const ChainRecord*> good;
  for (const auto& r : records) {
    for (int l = 0; l < static_cast<int>(r.levels.size()); ++l) {
      auto out = open_out(chain_file(rep.dir, static_cast<int>(r.chain_id), l));
      write_chain_csv(out, r, l,
                      provenance(c, "chain=" + std::to_string(r.chain_id) +
                                        " level=" + std::to_string(l)));
    }
    if (r.aborted) {
      rep.failed_chains.push_back("chain " + std::to_string(r.chain_id) + ": " + r.abort_reason);
      aborted.push_back({{"chain", r.chain_id}, {"reason", r.abort_reason}});
    } else {
      good.push_back(&r);
    }
  }
  if (good.empty())
    throw NumericalError("run: every chain failed (" + rep.failed_chains.front() + ")");

  for (int l = 0; l <= c.L; ++l) {
    const auto ul = static_cast<std::size_t>(l);
    Vector field = Vector::Zero(good.front()->mean_field[ul].size());
    Vector pressure = Vector::Zero(good.front()->mean_pressure[ul].size());
    for (const auto* r : good) {
      field += r->mean_field[ul];
      pressure += r->mean_pressure[ul];
    }
    field /= static_cast<double>(good.size());
    pressure /= static_cast<double>(good.size());
    const MeshLevel& mesh = setup->hier.levels[ul];
    const std::string extra = provenance(c, "posterior_mean chains=" + std::to_string(good.size()));
    auto fo = open_out(rep.dir / ("posterior_field_level_" + std::to_string(l) + ".csv"));
    write_field_csv(fo, mesh, field, extra);
    auto po = open_out(rep.dir / ("posterior_pressure_level_" + std::to_string(l) + ".csv"));
    write_pressure_csv(po, mesh, pressure, "level=" + std::to_string(l) + " " + extra);
  }

  try {
    const RunSummary s = summarize(records, c.epsilon, c.seed);
    nlohmann::json j = to_json(s);
    j["config_hash"] = hash;
    j["provenance"] = provenance(c);
    j["aborted_chains"] = aborted;
    j["coarsest_sampler"] = to_string(c.coarsest_sampler);
    write_json(summary_path, j);
    rep.summary = s;
    rep.summarized = true;
  } catch (const InvalidArgument& e) {
    std::cerr << "warning: summary skipped: " << e.what() << '\n';
  }
  return rep;
}

nlohmann::json diagnostics(const fs::path& run_dir, const DiagnosticsOptions& o) {
  const fs::path cfg_path = run_dir / "config.txt";
  if (!fs::exists(cfg_path)) throw IoError("diagnostics: missing files: " + cfg_path.string());
  const RunConfig c = load_config(cfg_path);

  std::vector<std::string> missing;
  for (int ch = 0; ch < c.n_chains; ++ch)
    for (int l = 0; l <= c.L; ++l)
      if (!fs::exists(chain_file(run_dir, ch, l))) missing.push_back(chain_file(run_dir, ch, l).string());
  if (!missing.empty()) {
    std::string msg = "diagnostics: missing files:";
    for (const auto& m : missing) msg += ' ' + m;
    throw IoError(msg);
  }

  std::vector<ChainRecord> records(static_cast<std::size_t>(c.n_chains));
  for (int ch = 0; ch < c.n_chains; ++ch) {
    auto& r = records[static_cast<std::size_t>(ch)];
    r.chain_id = static_cast<std::uint64_t>(ch);
    for (int l = 0; l <= c.L; ++l) {
      std::ifstream in(chain_file(run_dir, ch, l));
      r.levels.push_back(read_chain_csv(in));
    }
    r.failures.assign(r.levels.size(), 0);
  }
  const RunSummary s = summarize(records, c.epsilon, c.seed);

  const fs::path out_dir = run_dir / "diagnostics";
  fs::create_directories(out_dir);
  const std::string prov = provenance(c);

  nlohmann::json iact_q = nlohmann::json::array();
  for (int l = 0; l <= c.L; ++l) {
    for (bool y : {false, true}) {
      std::vector<double> mean_rho;
      std::vector<double> taus;
      int used = 0;
      for (const auto& r : records) {
        const auto series = r.series(l, y);
        const std::size_t lag = std::min(o.max_lag, series.size() - 1);
        std::vector<double> rho;
        try {
          rho = acf(series, lag);
          taus.push_back(iact(series));
        } catch (const InvalidArgument&) {
          continue; // constant series
        }
        if (mean_rho.empty()) mean_rho.assign(rho.size(), 0.0);
        const std::size_t n = std::min(mean_rho.size(), rho.size());
        mean_rho.resize(n);
        for (std::size_t k = 0; k < n; ++k) mean_rho[k] += rho[k];
        ++used;
      }
      for (double& v : mean_rho) v /= std::max(used, 1);
      auto out = open_out(out_dir / ("acf_level" + std::to_string(l) + (y ? "_Y" : "_Q") + ".csv"));
      write_acf_csv(out, mean_rho,
                    prov + " level=" + std::to_string(l) + " quantity=" + (y ? "Y" : "Q") +
                        " chains_averaged=" + std::to_string(used));
      if (!y) {
        double t = 0.0;
        for (double v : taus) t += v;
        iact_q.push_back(taus.empty() ? 1.0 : t / static_cast<double>(taus.size()));
      }
    }
  }

  {
    auto out = open_out(out_dir / "acceptance.csv");
    out.precision(17);
    out << "# " << prov << "\nlevel,acceptance,acceptance_sd\n";
    for (std::size_t l = 0; l < s.levels.size(); ++l)
      out << l << ',' << s.levels[l].acceptance << ',' << s.levels_sd[l].acceptance << '\n';
  }
  {
    auto out = open_out(out_dir / "decay.csv");
    out.precision(17);
    out << "# " << prov << "\nlevel,mean_absY,mean_absY_sd,var_Y,var_Y_sd\n";
    for (std::size_t l = 0; l < s.levels.size(); ++l)
      out << l << ',' << s.levels[l].mean_absY << ',' << s.levels_sd[l].mean_absY << ','
          << s.levels[l].var_Y << ',' << s.levels_sd[l].var_Y << '\n';
  }
  {
    auto out = open_out(out_dir / "planned_N.csv");
    out.precision(17);
    out << "# " << prov << " epsilon=" << s.epsilon
        << "\nlevel,variance,iact,ess,cost_per_sample,effective_cost,planned_N\n";
    for (std::size_t l = 0; l < s.levels.size(); ++l) {
      const double v = l == 0 ? s.levels[0].var_Q : s.levels[l].var_Y;
      out << l << ',' << v << ',' << s.levels[l].iact << ',' << s.levels[l].ess << ','
          << s.levels[l].cost_per_sample << ',' << s.effective_cost[l] << ','
          << (l < s.planned_N.size() ? s.planned_N[l] : 0) << '\n';
    }
  }
  nlohmann::json j = to_json(s);
  j["iact_Q"] = iact_q;
  j["config_hash"] = hex(config_hash(c));
  j["provenance"] = prov;
  write_json(out_dir / "diagnostics.json", j);
  return j;
}

} // namespace hgrf
