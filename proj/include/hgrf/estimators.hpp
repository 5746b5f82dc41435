// SPDX-License-Identifier: Apache-2.0
#pragma once

// Multilevel estimates, autocorrelation diagnostics and the cost model used
// to plan per-level sample sizes.

#include "hgrf/mlmcmc.hpp"

#include "json.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

namespace hgrf {

/// Normalized autocorrelation for lags 0..max_lag:
///
///   rho(c) = 1/(N - c) sum_{i < N - c} (x_i - mu)(x_{i+c} - mu) / s^2
///
/// with mu the sample mean and s^2 the 1/N sample variance, so rho(0) = 1.
/// Throws if max_lag >= N or the series has zero variance.
std::vector<double> acf(std::span<const double> series, std::size_t max_lag);

struct IactResult {
  double tau = 1.0;
  std::size_t window = 0; // summation window M actually used
};

/// tau = 1 + 2 sum_{c=1}^{M} rho(c), M the smallest window with M >= 5 tau(M),
/// capped at N/10; tau is clamped below at 1. Needs N >= 100.
IactResult iact_window(std::span<const double> series);
double iact(std::span<const double> series);

struct TermEstimate {
  double mean = 0.0;
  double variance = 0.0; // 1/N sample variance
  double tau = 1.0;
  double std_error = 0.0; // sqrt(tau variance / N)
};

struct TelescopingEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::vector<TermEstimate> terms;
};

/// series[0] holds Q_0, series[l >= 1] holds Y_l = Q_l - Q_{l-1}.
TelescopingEstimate telescoping_estimate(std::span<const std::vector<double>> series);

/// ceil(tau_l) (C_l + ceil(tau_{l-1}) C_{l-1}); on level 0 pass
/// `has_coarser = false` to get ceil(tau_0) C_0.
double effective_cost(double tau_l, double tau_coarse, double cost_l, double cost_coarse,
                      bool has_coarser = true);

/// N_l = (2/eps^2) (sum_k sqrt(V_k C_k)) sqrt(V_l / C_l), rounded up, >= 1.
std::vector<std::uint64_t> optimal_samples(double epsilon, std::span<const double> variances,
                                           std::span<const double> costs);

struct LevelSummary {
  double mean_Q = 0.0;
  double var_Q = 0.0;
  double mean_absY = 0.0;
  double var_Y = 0.0;
  double acceptance = 0.0;
  double iact = 1.0;
  double ess = 0.0;
  double cost_per_sample = 0.0; // median wall time per step on this level
  double n = 0.0;               // post-burn-in samples
};

struct RunSummary {
  std::vector<LevelSummary> levels;    // averaged over chains
  std::vector<LevelSummary> levels_sd; // across-chain standard deviation
  std::vector<double> effective_cost;
  double ml_estimate = 0.0;
  double ml_estimate_sd = 0.0;
  double epsilon = 0.1;
  std::vector<std::uint64_t> planned_N;
  double predicted_total_cost = 0.0;
  int chains = 0;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> failures; // summed over chains
};

/// Statistics of one chain.
std::vector<LevelSummary> chain_statistics(const ChainRecord& record);

/// Per-chain statistics averaged over the non-aborted chains. Needs at least
/// one such chain with >= 100 post-burn-in samples per level.
RunSummary summarize(std::span<const ChainRecord> records, double epsilon, std::uint64_t seed);

nlohmann::json to_json(const RunSummary& s);
RunSummary summary_from_json(const nlohmann::json& j);

/// `lag,acf` rows after an optional `# ...` line.
void write_acf_csv(std::ostream& out, std::span<const double> rho, std::string_view header = {});

} // namespace hgrf
