// SPDX-License-Identifier: Apache-2.0
#pragma once

// Run configuration, persistence and the command implementations behind the
// `hgrf` executable.

#include "hgrf/estimators.hpp"
#include "hgrf/mlmcmc.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace hgrf {

/// Raised for unreadable or unwritable files.
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  double h0 = 0.1;
  int L = 2;
  double nu = 1.0;
  double correlation_length = 0.3;
  double sigma2 = 0.1;
  double sigma_eta2 = 0.01;
  CoarsestSampler coarsest_sampler = CoarsestSampler::Kl;
  Index kl_modes = 50;
  std::vector<double> beta{0.2};
  std::vector<int> subchain{1};
  int n_chains = 5;
  std::uint64_t n_samples = 10000;
  double burnin_fraction = 0.1;
  double epsilon = 0.1;
  std::uint64_t seed = 20240601;
  std::string output_dir = "run";
  std::string observations; // empty: <output_dir>/observations.json
  unsigned threads = 0;     // 0: one per hardware thread

  double kappa() const { return 1.0 / correlation_length; }
  double sigma() const;
  std::filesystem::path observations_path() const;
  /// Throws InvalidArgument describing the first inconsistent field.
  void validate() const;
};

/// `key = value` lines, one per field, in a fixed order.
std::string serialize(const RunConfig& c);
/// Parses `key = value` lines over the defaults. `#` starts a comment.
/// Unknown keys and malformed values throw InvalidArgument.
RunConfig parse_config(std::string_view text, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

/// FNV-1a hash of the serialized configuration, output location excluded.
std::uint64_t config_hash(const RunConfig& c);
std::string hex(std::uint64_t v);
/// "seed=<seed> config_hash=<hash>" plus `extra`.
std::string provenance(const RunConfig& c, std::string_view extra = {});

DarcyProblem darcy_problem(const RunConfig& c);

// Observations -------------------------------------------------------------

struct GeneratedObservations {
  ObservationSet obs;
  double reference_qoi = 0.0;
};

/// Reference mesh one refinement finer than level L, one SPDE field drawn
/// from `seed`, Darcy solve, lattice pressures plus N(0, sigma_eta^2) noise.
/// `sigma_eta_override` replaces sqrt(sigma_eta2), e.g. 0 for noiseless data.
GeneratedObservations generate_observations(const RunConfig& c, std::uint64_t seed,
                                            std::optional<double> sigma_eta_override = {});

nlohmann::json observations_to_json(const ObservationSet& obs, const RunConfig& c,
                                    double reference_qoi);
ObservationSet observations_from_json(const nlohmann::json& j);
void write_observations(const std::filesystem::path& path, const GeneratedObservations& g,
                        const RunConfig& c);
ObservationSet read_observations(const std::filesystem::path& path);

// Commands -----------------------------------------------------------------

struct SampleGrfOptions {
  CoarsestSampler sampler = CoarsestSampler::Spde;
  int level = 0;
  int count = 1;
};

/// Writes `count` field realizations on `level` as `grf_<sampler>_level<l>_<i>.csv`.
std::vector<std::filesystem::path> sample_grf(const RunConfig& c, const SampleGrfOptions& o);

struct RunReport {
  bool skipped = false;     // an identical completed run was found
  bool dry_run = false;     // n_samples == 0
  bool summarized = false;
  std::vector<std::string> failed_chains;
  std::optional<RunSummary> summary;
  std::filesystem::path dir;
};

/// Builds the hierarchy once, runs the chains and writes chain CSVs, posterior
/// mean field/pressure snapshots per level and summary.json. Rerunning with
/// an identical configuration skips the work.
RunReport run(const RunConfig& c);

struct DiagnosticsOptions {
  std::size_t max_lag = 50;
};

/// Reads a completed run directory and writes ACF tables, acceptance and
/// decay tables and the planned sample sizes to <run_dir>/diagnostics.
/// Throws IoError listing every missing input file.
nlohmann::json diagnostics(const std::filesystem::path& run_dir, const DiagnosticsOptions& o = {});

struct ValidateOptions {
  bool lumped_mass = false;
};

/// Identity suite on tiny hierarchies plus the constant-permeability Darcy
/// check. Each entry has name, residual, tolerance and pass.
nlohmann::json validate(const ValidateOptions& o = {});

} // namespace hgrf
