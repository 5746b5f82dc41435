// SPDX-License-Identifier: Apache-2.0
#pragma once

// Single-level Metropolis-Hastings and multilevel delayed acceptance with
// pCN proposals over the hierarchical noise state.
//
// A level-l step runs a level-(l-1) subchain started from the coarse part C
// of the current state, takes its end point * as the coarse part of the
// proposal P and perturbs only the level-l complement by pCN. The ratio
//
//   alpha = min{1, L_l(P) L_{l-1}(C) / (L_l(C) L_{l-1}(*))}
//
// corrects for the coarse screening. Acceptance commits * on every coarser
// level; rejection returns the coarse levels to C.

#include "hgrf/darcy_forward.hpp"
#include "hgrf/grf_samplers.hpp"
#include "hgrf/random.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hgrf {

/// xi_P = sqrt(1 - beta^2) xi_C + beta xi_new, xi_new ~ N(0, I).
Vector pcn_propose(const Vector& xi, double beta, Engine& engine);

/// Forward evaluation of one noise state on one level.
struct Evaluation {
  bool ok = false;
  double loglik = 0.0;
  double qoi = 0.0;
  Vector forcing;  // may be empty if the model has no forcing
  Vector field;    // optional snapshots for posterior means
  Vector pressure;
  std::string error;
};

/// The hierarchy of posteriors seen by the sampler. Implementations may hold
/// per-instance scratch space; one instance serves one chain.
class LevelModel {
public:
  virtual ~LevelModel() = default;
  virtual int finest() const = 0;
  virtual Index noise_size(int level) const = 0;
  /// `coarse_forcing`, if given, is the cached forcing of noise[0..level-1]
  /// and may be used to avoid recomputing it. Numerical failures are
  /// reported through Evaluation::ok rather than thrown.
  virtual Evaluation evaluate(int level, std::span<const Vector> noise,
                              const Vector* coarse_forcing) = 0;
};

/// Current state of the level-l chain. noise[k] for k < l is the coarse part,
/// noise[l] the level's own complement (or xi_0 / xi_hat on level 0).
struct LevelState {
  int level = 0;
  std::vector<Vector> noise;
  double loglik = 0.0;
  double qoi = 0.0;
  double coarse_loglik = 0.0; // level-(l-1) log-likelihood of the coarse part
  Vector forcing;
  Vector field;
  Vector pressure;
};

struct StepOutcome {
  bool accepted = false;
  bool failed = false;
  double log_alpha = 0.0;
  double coarse_qoi = 0.0; // Q_{l-1} at the coarse state used by the step
  std::string error;
};

/// Draws the level-l noise from the prior (extending `coarse` when given)
/// until a forward evaluation succeeds, at most `max_attempts` times.
LevelState initial_state(LevelModel& model, int level, const LevelState* coarse, Engine& engine,
                         int max_attempts = 100);

/// One pCN Metropolis-Hastings step on level 0. Acceptance uses the
/// likelihood ratio only; the prior and proposal terms cancel.
StepOutcome mh_step_level0(LevelModel& model, LevelState& state, double beta,
                           Engine& proposal_rng, Engine& accept_rng);

/// One two-level step on level l >= 1, given the already advanced coarse
/// state. On acceptance `fine` becomes the proposal composed of coarse.noise
/// and a pCN move of fine.noise[l].
StepOutcome mlda_step(LevelModel& model, LevelState& fine, const LevelState& coarse, double beta,
                      Engine& proposal_rng, Engine& accept_rng);

struct ChainConfig {
  int finest = 0;
  std::vector<double> beta;  // per level; a single entry applies to all
  std::vector<int> subchain; // coarse steps of level l per level l+1 step
  double burnin_fraction = 0.1;
  std::uint64_t seed = 0;
  bool track_means = false; // accumulate posterior means of field and pressure
};

struct ChainRow {
  std::uint64_t iter = 0;
  double Q = 0.0;
  double Y = 0.0;
  bool accepted = false;
  double loglik = 0.0;
  double coarse_loglik = 0.0;
  double wall_time_s = 0.0;
  bool burnin = false;
};

struct ChainRecord {
  std::uint64_t chain_id = 0;
  std::vector<std::vector<ChainRow>> levels; // rows per level
  std::vector<std::uint64_t> failures;       // forward failures per level
  std::vector<Vector> mean_field;            // per level, after burn-in
  std::vector<Vector> mean_pressure;
  bool aborted = false;
  std::string abort_reason;

  /// Series of `Q` or `Y` on a level, burn-in excluded.
  std::vector<double> series(int level, bool y) const;
};

/// Steps per level implied by `n_samples` fine-level steps.
std::vector<std::uint64_t> steps_per_level(const ChainConfig& config, std::uint64_t n_samples);

/// Runs one chain for `n_samples` fine-level steps. Deterministic given
/// (config.seed, chain_id), apart from the recorded wall times. A NumericalError
/// in a step is a rejection; any other exception aborts the chain and the
/// rows recorded so far are returned with `aborted` set.
ChainRecord run_chain(LevelModel& model, const ChainConfig& config, std::uint64_t chain_id,
                      std::uint64_t n_samples);

using ModelFactory = std::function<std::unique_ptr<LevelModel>()>;

/// Runs chains 0..n_chains-1 on `threads` worker threads (0 = hardware
/// concurrency). Each chain gets its own model instance from `factory`.
std::vector<ChainRecord> run_chains(const ModelFactory& factory, const ChainConfig& config,
                                    int n_chains, std::uint64_t n_samples, unsigned threads = 0);

/// `iter,level,Q,Y,accepted,loglik,coarse_loglik,wall_time_s,burnin_flag`
/// after an optional `# ...` line.
void write_chain_csv(std::ostream& out, const ChainRecord& record, int level,
                     std::string_view header = {});

/// Reads rows written by write_chain_csv; `#` lines are skipped.
std::vector<ChainRow> read_chain_csv(std::istream& in);

// ---------------------------------------------------------------------------
// Darcy posterior

struct DarcyProblem {
  double h0 = 0.1;
  int L = 2;
  double kappa = 1.0 / 0.3;
  double nu = 1.0;
  double sigma = 0.31622776601683794;
  CoarsestSampler coarsest = CoarsestSampler::Kl;
  Index kl_modes = 50;
  DarcyBoundary bc;
};

/// Immutable data shared by all chains.
struct DarcySetup {
  DarcyProblem problem;
  Hierarchy hier;
  std::vector<SpdeOperators> ops;
  std::unique_ptr<MultilevelSampler> sampler;
  ObservationSet obs;
};

std::shared_ptr<const DarcySetup> make_darcy_setup(const DarcyProblem& problem,
                                                   ObservationSet obs);

/// Log-normal permeability exp(theta) pushed through the mixed Darcy solver,
/// Gaussian likelihood of the observed pressures, Q the boundary flux.
class DarcyPosterior final : public LevelModel {
public:
  explicit DarcyPosterior(std::shared_ptr<const DarcySetup> setup, bool keep_snapshots = false);

  int finest() const override { return setup_->sampler->finest(); }
  Index noise_size(int level) const override { return setup_->sampler->noise_size(level); }
  Evaluation evaluate(int level, std::span<const Vector> noise,
                      const Vector* coarse_forcing) override;

  const DarcySetup& setup() const { return *setup_; }

private:
  std::shared_ptr<const DarcySetup> setup_;
  std::vector<DarcySolver> solvers_;
  bool keep_snapshots_;
};

} // namespace hgrf
