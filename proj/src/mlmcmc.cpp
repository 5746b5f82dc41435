// SPDX-License-Identifier: Apache-2.0
#include "hgrf/mlmcmc.hpp"

#include "hgrf/simd/kernels.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

namespace hgrf {

Vector pcn_propose(const Vector& xi, double beta, Engine& engine) {
  if (!(beta > 0.0 && beta <= 1.0))
    throw InvalidArgument("pcn_propose: beta = " + std::to_string(beta) + " must lie in (0, 1]");
  Vector out = standard_normal(xi.size(), engine);
  const double keep = std::sqrt(1.0 - beta * beta);
  simd::active().axpby(keep, xi.data(), beta, out.data(), out.data(),
                       static_cast<std::size_t>(xi.size()));
  return out;
}

namespace {

Evaluation evaluate_checked(LevelModel& model, int level, std::span<const Vector> noise,
                            const Vector* coarse_forcing) {
  try {
    return model.evaluate(level, noise, coarse_forcing);
  } catch (const NumericalError& e) {
    Evaluation ev;
    ev.ok = false;
    ev.error = e.what();
    return ev;
  }
}

void adopt(LevelState& s, std::vector<Vector> noise, Evaluation&& ev) {
  s.noise = std::move(noise);
  s.loglik = ev.loglik;
  s.qoi = ev.qoi;
  s.forcing = std::move(ev.forcing);
  s.field = std::move(ev.field);
  s.pressure = std::move(ev.pressure);
}

bool accept(double log_alpha, Engine& accept_rng) {
  const double u = uniform01(accept_rng);
  return log_alpha >= 0.0 || std::log(u) < log_alpha;
}

} // namespace

LevelState initial_state(LevelModel& model, int level, const LevelState* coarse, Engine& engine,
                         int max_attempts) {
  if (level < 0 || level > model.finest())
    throw InvalidArgument("initial_state: level out of range");
  if (level > 0 && (!coarse || coarse->level != level - 1))
    throw InvalidArgument("initial_state: level >= 1 needs the level-(l-1) state");
  std::string last_error;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    std::vector<Vector> noise;
    if (coarse) noise = coarse->noise;
    noise.push_back(standard_normal(model.noise_size(level), engine));
    const Vector* cf = coarse && coarse->forcing.size() > 0 ? &coarse->forcing : nullptr;
    Evaluation ev = evaluate_checked(model, level, noise, cf);
    if (!ev.ok) {
      last_error = ev.error;
      continue;
    }
    LevelState s;
    s.level = level;
    s.coarse_loglik = coarse ? coarse->loglik : 0.0;
    adopt(s, std::move(noise), std::move(ev));
    return s;
  }
  throw NumericalError("initial_state: no admissible prior draw on level " + std::to_string(level) +
                       " after " + std::to_string(max_attempts) + " attempts (" + last_error + ")");
}

StepOutcome mh_step_level0(LevelModel& model, LevelState& state, double beta,
                           Engine& proposal_rng, Engine& accept_rng) {
  if (state.level != 0 || state.noise.size() != 1)
    throw InvalidArgument("mh_step_level0: state is not a level-0 state");
  std::vector<Vector> noise{pcn_propose(state.noise[0], beta, proposal_rng)};
  StepOutcome out;
  Evaluation ev = evaluate_checked(model, 0, noise, nullptr);
  if (!ev.ok) {
    out.failed = true;
    out.error = std::move(ev.error);
    return out;
  }
  out.log_alpha = ev.loglik - state.loglik;
  out.accepted = accept(out.log_alpha, accept_rng);
  if (out.accepted) adopt(state, std::move(noise), std::move(ev));
  return out;
}

StepOutcome mlda_step(LevelModel& model, LevelState& fine, const LevelState& coarse, double beta,
                      Engine& proposal_rng, Engine& accept_rng) {
  const int l = fine.level;
  if (l < 1 || coarse.level != l - 1 || fine.noise.size() != static_cast<std::size_t>(l) + 1 ||
      coarse.noise.size() != static_cast<std::size_t>(l))
    throw InvalidArgument("mlda_step: inconsistent fine/coarse states");

  std::vector<Vector> noise = coarse.noise;
  noise.push_back(pcn_propose(fine.noise[static_cast<std::size_t>(l)], beta, proposal_rng));

  StepOutcome out;
  out.coarse_qoi = coarse.qoi;
  const Vector* cf = coarse.forcing.size() > 0 ? &coarse.forcing : nullptr;
  Evaluation ev = evaluate_checked(model, l, noise, cf);
  if (!ev.ok) {
    out.failed = true;
    out.error = std::move(ev.error);
    return out;
  }
  out.log_alpha = (ev.loglik - fine.loglik) + (fine.coarse_loglik - coarse.loglik);
  out.accepted = accept(out.log_alpha, accept_rng);
  if (out.accepted) {
    adopt(fine, std::move(noise), std::move(ev));
    fine.coarse_loglik = coarse.loglik;
  }
  return out;
}

std::vector<double> ChainRecord::series(int level, bool y) const {
  std::vector<double> out;
  for (const auto& r : levels.at(static_cast<std::size_t>(level)))
    if (!r.burnin) out.push_back(y ? r.Y : r.Q);
  return out;
}

namespace {

double beta_at(const ChainConfig& c, int l) {
  if (c.beta.empty()) return 0.2;
  return c.beta.size() == 1 ? c.beta[0] : c.beta.at(static_cast<std::size_t>(l));
}

int subchain_at(const ChainConfig& c, int l) {
  if (c.subchain.empty()) return 1;
  return c.subchain.size() == 1 ? c.subchain[0] : c.subchain.at(static_cast<std::size_t>(l));
}

void check_config(const ChainConfig& c) {
  if (c.finest < 0) throw InvalidArgument("ChainConfig: finest level must be >= 0");
  if (c.beta.size() > 1 && c.beta.size() != static_cast<std::size_t>(c.finest) + 1)
    throw InvalidArgument("ChainConfig: need one beta per level or a single beta");
  for (double b : c.beta)
    if (!(b > 0.0 && b <= 1.0)) throw InvalidArgument("ChainConfig: beta must lie in (0, 1]");
  if (c.subchain.size() > 1 && c.subchain.size() != static_cast<std::size_t>(c.finest))
    throw InvalidArgument("ChainConfig: need one subchain length per coarse level or a single one");
  for (int s : c.subchain)
    if (s < 1) throw InvalidArgument("ChainConfig: subchain lengths must be >= 1");
  if (!(c.burnin_fraction >= 0.0 && c.burnin_fraction < 1.0))
    throw InvalidArgument("ChainConfig: burnin_fraction must lie in [0, 1)");
}

class Runner {
public:
  Runner(LevelModel& model, const ChainConfig& cfg, std::uint64_t chain, ChainRecord& rec,
         const std::vector<std::uint64_t>& steps)
      : model_(model), cfg_(cfg), chain_(chain), rec_(rec) {
    const auto n = static_cast<std::size_t>(cfg.finest) + 1;
    counters_.assign(n, 0);
    burn_.resize(n);
    for (std::size_t l = 0; l < n; ++l)
      burn_[l] = static_cast<std::uint64_t>(std::floor(cfg.burnin_fraction * static_cast<double>(steps[l])));
    counted_.assign(n, 0);
  }

  void initialize() {
    for (int l = 0; l <= cfg_.finest; ++l) {
      Engine eng = make_engine({cfg_.seed, chain_, static_cast<std::uint64_t>(l), 0, StreamPurpose::Initial});
      states_.push_back(initial_state(model_, l, l > 0 ? &states_.back() : nullptr, eng));
    }
    if (cfg_.track_means) {
      rec_.mean_field.resize(states_.size());
      rec_.mean_pressure.resize(states_.size());
      for (std::size_t l = 0; l < states_.size(); ++l) {
        rec_.mean_field[l] = Vector::Zero(states_[l].field.size());
        rec_.mean_pressure[l] = Vector::Zero(states_[l].pressure.size());
      }
    }
  }

  // Invariant between steps: states_[k - 1] is the coarse part of states_[k].
  void step(int l) {
    const auto ul = static_cast<std::size_t>(l);
    std::vector<LevelState> saved;
    if (l > 0) {
      saved.assign(states_.begin(), states_.begin() + l);
      for (int s = 0; s < subchain_at(cfg_, l - 1); ++s) step(l - 1);
    }

    const auto t0 = std::chrono::steady_clock::now();
    const std::uint64_t it = counters_[ul];
    Engine prop = make_engine({cfg_.seed, chain_, ul, it + 1, StreamPurpose::Proposal});
    Engine acc = make_engine({cfg_.seed, chain_, ul, it + 1, StreamPurpose::Acceptance});
    const StepOutcome o =
        l == 0 ? mh_step_level0(model_, states_[0], beta_at(cfg_, 0), prop, acc)
               : mlda_step(model_, states_[ul], states_[ul - 1], beta_at(cfg_, l), prop, acc);
    // A rejected fine step leaves the coarse levels where the fine chain is.
    if (l > 0 && !o.accepted) std::move(saved.begin(), saved.end(), states_.begin());
    const auto t1 = std::chrono::steady_clock::now();

    const LevelState& s = states_[ul];
    ChainRow row;
    row.iter = it;
    row.Q = s.qoi;
    row.Y = l == 0 ? s.qoi : s.qoi - o.coarse_qoi;
    row.accepted = o.accepted;
    row.loglik = s.loglik;
    row.coarse_loglik = s.coarse_loglik;
    row.wall_time_s = std::chrono::duration<double>(t1 - t0).count();
    row.burnin = it < burn_[ul];
    rec_.levels[ul].push_back(row);
    if (o.failed) ++rec_.failures[ul];
    if (cfg_.track_means && !row.burnin) {
      rec_.mean_field[ul] += s.field;
      rec_.mean_pressure[ul] += s.pressure;
      ++counted_[ul];
    }
    ++counters_[ul];
  }

  void finish_means() {
    if (!cfg_.track_means) return;
    for (std::size_t l = 0; l < counted_.size(); ++l) {
      if (counted_[l] == 0) continue;
      rec_.mean_field[l] /= static_cast<double>(counted_[l]);
      rec_.mean_pressure[l] /= static_cast<double>(counted_[l]);
    }
  }

private:
  LevelModel& model_;
  const ChainConfig& cfg_;
  std::uint64_t chain_;
  ChainRecord& rec_;
  std::vector<LevelState> states_;
  std::vector<std::uint64_t> counters_;
  std::vector<std::uint64_t> burn_;
  std::vector<std::uint64_t> counted_;
};

} // namespace

std::vector<std::uint64_t> steps_per_level(const ChainConfig& config, std::uint64_t n_samples) {
  check_config(config);
  std::vector<std::uint64_t> steps(static_cast<std::size_t>(config.finest) + 1);
  steps.back() = n_samples;
  for (int l = config.finest - 1; l >= 0; --l)
    steps[static_cast<std::size_t>(l)] =
        steps[static_cast<std::size_t>(l) + 1] * static_cast<std::uint64_t>(subchain_at(config, l));
  return steps;
}

ChainRecord run_chain(LevelModel& model, const ChainConfig& config, std::uint64_t chain_id,
                      std::uint64_t n_samples) {
  const auto steps = steps_per_level(config, n_samples);
  if (config.finest > model.finest())
    throw InvalidArgument("run_chain: configured finest level exceeds the model's");
  ChainRecord rec;
  rec.chain_id = chain_id;
  rec.levels.resize(steps.size());
  rec.failures.assign(steps.size(), 0);
  if (n_samples == 0) return rec;
  for (std::size_t l = 0; l < steps.size(); ++l) rec.levels[l].reserve(steps[l]);

  Runner runner(model, config, chain_id, rec, steps);
  try {
    runner.initialize();
    for (std::uint64_t i = 0; i < n_samples; ++i) runner.step(config.finest);
  } catch (const std::exception& e) {
    rec.aborted = true;
    rec.abort_reason = e.what();
  }
  runner.finish_means();
  return rec;
}

std::vector<ChainRecord> run_chains(const ModelFactory& factory, const ChainConfig& config,
                                    int n_chains, std::uint64_t n_samples, unsigned threads) {
  if (n_chains < 0) throw InvalidArgument("run_chains: n_chains must be >= 0");
  check_config(config);
  std::vector<ChainRecord> out(static_cast<std::size_t>(n_chains));
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max(n_chains, 1)));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int c = next++; c < n_chains; c = next++) {
      auto& slot = out[static_cast<std::size_t>(c)];
      try {
        auto model = factory();
        slot = run_chain(*model, config, static_cast<std::uint64_t>(c), n_samples);
      } catch (const std::exception& e) {
        slot.chain_id = static_cast<std::uint64_t>(c);
        slot.aborted = true;
        slot.abort_reason = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return out;
}

void write_chain_csv(std::ostream& out, const ChainRecord& record, int level,
                     std::string_view header) {
  const auto& rows = record.levels.at(static_cast<std::size_t>(level));
  out.precision(17);
  if (!header.empty()) out << "# " << header << '\n';
  out << "iter,level,Q,Y,accepted,loglik,coarse_loglik,wall_time_s,burnin_flag\n";
  for (const auto& r : rows)
    out << r.iter << ',' << level << ',' << r.Q << ',' << r.Y << ',' << (r.accepted ? 1 : 0) << ','
        << r.loglik << ',' << r.coarse_loglik << ',' << r.wall_time_s << ',' << (r.burnin ? 1 : 0)
        << '\n';
}

std::vector<ChainRow> read_chain_csv(std::istream& in) {
  std::vector<ChainRow> rows;
  std::string line;
  bool header_seen = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line.rfind("iter,level,Q,Y", 0) != 0)
        throw InvalidArgument("read_chain_csv: unexpected header '" + line + "'");
      header_seen = true;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string tok; std::getline(ss, tok, ',');) f.push_back(tok);
    if (f.size() != 9)
      throw InvalidArgument("read_chain_csv: line " + std::to_string(lineno) + " has " +
                            std::to_string(f.size()) + " fields, expected 9");
    ChainRow r;
    try {
      r.iter = std::stoull(f[0]);
      r.Q = std::stod(f[2]);
      r.Y = std::stod(f[3]);
      r.accepted = f[4] == "1";
      r.loglik = std::stod(f[5]);
      r.coarse_loglik = std::stod(f[6]);
      r.wall_time_s = std::stod(f[7]);
      r.burnin = f[8] == "1";
    } catch (const std::logic_error&) {
      throw InvalidArgument("read_chain_csv: malformed number on line " + std::to_string(lineno));
    }
    rows.push_back(r);
  }
  if (!header_seen) throw InvalidArgument("read_chain_csv: missing header");
  return rows;
}

std::shared_ptr<const DarcySetup> make_darcy_setup(const DarcyProblem& problem,
                                                   ObservationSet obs) {
  if (obs.points.size() != static_cast<std::size_t>(obs.values.size()))
    throw InvalidArgument("make_darcy_setup: observation points and values differ in length");
  auto s = std::make_shared<DarcySetup>();
  s->problem = problem;
  s->hier = build_hierarchy(problem.h0, problem.L);
  s->ops = assemble_spde_hierarchy(s->hier, problem.kappa, problem.nu, problem.sigma);
  s->sampler = std::make_unique<MultilevelSampler>(s->hier, s->ops, problem.coarsest,
                                                   problem.kl_modes);
  s->obs = std::move(obs);
  return s;
}

DarcyPosterior::DarcyPosterior(std::shared_ptr<const DarcySetup> setup, bool keep_snapshots)
    : setup_(std::move(setup)), keep_snapshots_(keep_snapshots) {
  if (!setup_) throw InvalidArgument("DarcyPosterior: null setup");
  for (const auto& mesh : setup_->hier.levels) solvers_.emplace_back(mesh, setup_->problem.bc);
}

Evaluation DarcyPosterior::evaluate(int level, std::span<const Vector> noise,
                                    const Vector* coarse_forcing) {
  const MultilevelSampler& smp = *setup_->sampler;
  if (level < 0 || level > smp.finest() || noise.size() != static_cast<std::size_t>(level) + 1)
    throw InvalidArgument("DarcyPosterior::evaluate: inconsistent level/noise state");
  Evaluation ev;
  try {
    FieldRealization f;
    if (level == 0) {
      ev.forcing = smp.coarsest_forcing(noise[0]);
      f = smp.coarsest() == CoarsestSampler::Kl ? kl_sample(*smp.kl_basis(), noise[0])
                                                : smp.field_from_forcing(0, ev.forcing);
    } else {
      Vector cf = coarse_forcing ? *coarse_forcing : smp.forcing(level - 1, noise.first(level));
      ev.forcing = smp.lift(level, cf, noise);
      f = smp.field_from_forcing(level, ev.forcing);
    }
    const MeshLevel& mesh = setup_->hier.levels[static_cast<std::size_t>(level)];
    const DarcySolution sol =
        solvers_[static_cast<std::size_t>(level)].solve(project_permeability(mesh, f.theta));
    ev.qoi = compute_qoi(sol, mesh);
    ev.loglik = log_likelihood(observe(sol, mesh, setup_->obs.points), setup_->obs);
    if (!std::isfinite(ev.loglik) || !std::isfinite(ev.qoi))
      throw NumericalError("DarcyPosterior::evaluate: non-finite likelihood or QoI");
    if (keep_snapshots_) {
      ev.field = std::move(f.theta);
      ev.pressure = sol.p;
    }
    ev.ok = true;
  } catch (const NumericalError& e) {
    ev.ok = false;
    ev.error = e.what();
  }
  return ev;
}

} // namespace hgrf
