// SPDX-License-Identifier: Apache-2.0
#include "hgrf/estimators.hpp"

#include "hgrf/simd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>

namespace hgrf {
namespace {

struct Moments {
  double mean = 0.0;
  double var = 0.0; // 1/N
};

Moments moments(std::span<const double> x) {
  Moments m;
  if (x.empty()) return m;
  const double n = static_cast<double>(x.size());
  m.mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  m.var = simd::active().lagged_product_sum(x.data(), x.size(), 0, m.mean) / n;
  // rounding noise of a constant series is not variance
  if (m.var <= 1e-28 * m.mean * m.mean) m.var = 0.0;
  return m;
}

double rho_at(std::span<const double> x, std::size_t lag, const Moments& m) {
  const double s = simd::active().lagged_product_sum(x.data(), x.size(), lag, m.mean);
  return s / static_cast<double>(x.size() - lag) / m.var;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

// Rounds up a value that is mathematically an integer without letting the
// last-bit error of the arithmetic push it to the next integer.
std::uint64_t ceil_tolerant(double x) {
  const double r = std::round(x);
  if (std::abs(x - r) <= 1e-12 * std::max(1.0, std::abs(x))) return static_cast<std::uint64_t>(r);
  return static_cast<std::uint64_t>(std::ceil(x));
}

} // namespace

std::vector<double> acf(std::span<const double> series, std::size_t max_lag) {
  if (max_lag >= series.size())
    throw InvalidArgument("acf: max_lag = " + std::to_string(max_lag) +
                          " must be below the series length " + std::to_string(series.size()));
  const Moments m = moments(series);
  if (!(m.var > 0.0)) throw InvalidArgument("acf: series has zero variance");
  std::vector<double> rho(max_lag + 1);
  rho[0] = 1.0;
  for (std::size_t c = 1; c <= max_lag; ++c) rho[c] = rho_at(series, c, m);
  return rho;
}

IactResult iact_window(std::span<const double> series) {
  if (series.size() < 100)
    throw InvalidArgument("iact: need at least 100 samples, got " + std::to_string(series.size()));
  const Moments m = moments(series);
  if (!(m.var > 0.0)) throw InvalidArgument("iact: series has zero variance");
  const std::size_t cap = series.size() / 10;
  double tau = 1.0;
  std::size_t M = 0;
  while (M < cap) {
    ++M;
    tau += 2.0 * rho_at(series, M, m);
    if (static_cast<double>(M) >= 5.0 * tau) break;
  }
  return {std::max(1.0, tau), M};
}

double iact(std::span<const double> series) { return iact_window(series).tau; }

TelescopingEstimate telescoping_estimate(std::span<const std::vector<double>> series) {
  if (series.empty()) throw InvalidArgument("telescoping_estimate: no levels");
  TelescopingEstimate est;
  double var_sum = 0.0;
  for (std::size_t l = 0; l < series.size(); ++l) {
    const auto& s = series[l];
    if (s.empty())
      throw InvalidArgument("telescoping_estimate: level " + std::to_string(l) + " has no samples");
    const Moments m = moments(s);
    TermEstimate t;
    t.mean = m.mean;
    t.variance = m.var;
    t.tau = (m.var > 0.0 && s.size() >= 100) ? iact(s) : 1.0;
    t.std_error = std::sqrt(t.tau * t.variance / static_cast<double>(s.size()));
    est.value += t.mean;
    var_sum += t.std_error * t.std_error;
    est.terms.push_back(t);
  }
  est.std_error = std::sqrt(var_sum);
  return est;
}

double effective_cost(double tau_l, double tau_coarse, double cost_l, double cost_coarse,
                      bool has_coarser) {
  const double own = std::ceil(tau_l);
  if (!has_coarser) return own * cost_l;
  return own * (cost_l + std::ceil(tau_coarse) * cost_coarse);
}

std::vector<std::uint64_t> optimal_samples(double epsilon, std::span<const double> variances,
                                           std::span<const double> costs) {
  if (!(epsilon > 0.0)) throw InvalidArgument("optimal_samples: epsilon must be > 0");
  if (variances.empty() || variances.size() != costs.size())
    throw InvalidArgument("optimal_samples: need one variance and one cost per level");
  bool any_positive = false;
  for (std::size_t l = 0; l < variances.size(); ++l) {
    if (!(variances[l] >= 0.0)) throw InvalidArgument("optimal_samples: variances must be >= 0");
    if (!(costs[l] > 0.0)) throw InvalidArgument("optimal_samples: costs must be > 0");
    any_positive = any_positive || variances[l] > 0.0;
  }
  if (!any_positive) throw InvalidArgument("optimal_samples: all variances are zero");

  double sum = 0.0;
  for (std::size_t l = 0; l < variances.size(); ++l) sum += std::sqrt(variances[l] * costs[l]);
  std::vector<std::uint64_t> N(variances.size());
  for (std::size_t l = 0; l < variances.size(); ++l) {
    const double x = 2.0 / (epsilon * epsilon) * sum * std::sqrt(variances[l] / costs[l]);
    N[l] = std::max<std::uint64_t>(1, ceil_tolerant(x));
  }
  return N;
}

std::vector<LevelSummary> chain_statistics(const ChainRecord& record) {
  std::vector<LevelSummary> out;
  for (std::size_t l = 0; l < record.levels.size(); ++l) {
    const auto& rows = record.levels[l];
    std::vector<double> q, y, absy, times;
    std::size_t accepted = 0;
    for (const auto& r : rows) {
      times.push_back(r.wall_time_s);
      if (r.burnin) continue;
      q.push_back(r.Q);
      y.push_back(r.Y);
      absy.push_back(std::abs(r.Y));
      accepted += r.accepted ? 1 : 0;
    }
    if (q.size() < 100)
      throw InvalidArgument("summarize: level " + std::to_string(l) + " has " +
                            std::to_string(q.size()) + " post-burn-in samples; need >= 100");
    LevelSummary s;
    const Moments mq = moments(q);
    const Moments my = moments(y);
    s.n = static_cast<double>(q.size());
    s.mean_Q = mq.mean;
    s.var_Q = mq.var;
    s.mean_absY = moments(absy).mean;
    s.var_Y = my.var;
    s.acceptance = static_cast<double>(accepted) / s.n;
    s.iact = my.var > 0.0 ? iact(y) : 1.0;
    s.ess = s.n / s.iact;
    s.cost_per_sample = median(times);
    out.push_back(s);
  }
  return out;
}

namespace {

using Field = double LevelSummary::*;
constexpr Field kFields[] = {&LevelSummary::mean_Q,     &LevelSummary::var_Q,
                             &LevelSummary::mean_absY,  &LevelSummary::var_Y,
                             &LevelSummary::acceptance, &LevelSummary::iact,
                             &LevelSummary::ess,        &LevelSummary::cost_per_sample,
                             &LevelSummary::n};

} // namespace

RunSummary summarize(std::span<const ChainRecord> records, double epsilon, std::uint64_t seed) {
  std::vector<std::vector<LevelSummary>> per_chain;
  std::vector<double> ml;
  RunSummary s;
  s.epsilon = epsilon;
  s.seed = seed;
  for (const auto& r : records) {
    if (s.failures.size() < r.failures.size()) s.failures.resize(r.failures.size(), 0);
    for (std::size_t l = 0; l < r.failures.size(); ++l) s.failures[l] += r.failures[l];
    if (r.aborted) continue;
    per_chain.push_back(chain_statistics(r));
    double est = 0.0;
    for (std::size_t l = 0; l < per_chain.back().size(); ++l)
      est += l == 0 ? per_chain.back()[0].mean_Q : moments(r.series(static_cast<int>(l), true)).mean;
    ml.push_back(est);
  }
  if (per_chain.empty()) throw InvalidArgument("summarize: no completed chain");
  const std::size_t levels = per_chain.front().size();
  for (const auto& c : per_chain)
    if (c.size() != levels) throw InvalidArgument("summarize: chains have different level counts");

  const double nc = static_cast<double>(per_chain.size());
  s.chains = static_cast<int>(per_chain.size());
  s.levels.assign(levels, LevelSummary{});
  s.levels_sd.assign(levels, LevelSummary{});
  for (std::size_t l = 0; l < levels; ++l) {
    for (Field f : kFields) {
      double sum = 0.0;
      for (const auto& c : per_chain) sum += c[l].*f;
      const double mean = sum / nc;
      double ss = 0.0;
      for (const auto& c : per_chain) ss += (c[l].*f - mean) * (c[l].*f - mean);
      s.levels[l].*f = mean;
      s.levels_sd[l].*f = per_chain.size() > 1 ? std::sqrt(ss / (nc - 1.0)) : 0.0;
    }
  }
  const Moments mm = moments(ml);
  s.ml_estimate = mm.mean;
  s.ml_estimate_sd = per_chain.size() > 1 ? std::sqrt(mm.var * nc / (nc - 1.0)) : 0.0;

  std::vector<double> V(levels), C(levels);
  for (std::size_t l = 0; l < levels; ++l) {
    const auto& L = s.levels[l];
    V[l] = l == 0 ? L.var_Q : L.var_Y;
    C[l] = l == 0 ? effective_cost(L.iact, 0.0, L.cost_per_sample, 0.0, false)
                  : effective_cost(L.iact, s.levels[l - 1].iact, L.cost_per_sample,
                                   s.levels[l - 1].cost_per_sample);
  }
  s.effective_cost = C;
  bool plannable = std::any_of(V.begin(), V.end(), [](double v) { return v > 0.0; }) &&
                   std::all_of(C.begin(), C.end(), [](double c) { return c > 0.0; });
  if (plannable && epsilon > 0.0) {
    s.planned_N = optimal_samples(epsilon, V, C);
    for (std::size_t l = 0; l < levels; ++l)
      s.predicted_total_cost += static_cast<double>(s.planned_N[l]) * C[l];
  }
  return s;
}

namespace {

nlohmann::json level_array(const std::vector<LevelSummary>& v, Field f) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& s : v) a.push_back(s.*f);
  return a;
}

void read_level_array(const nlohmann::json& j, const char* key, std::vector<LevelSummary>& v,
                      Field f) {
  const auto& a = j.at(key);
  if (v.size() < a.size()) v.resize(a.size());
  for (std::size_t l = 0; l < a.size(); ++l) v[l].*f = a[l].get<double>();
}

struct Key {
  const char* name;
  Field field;
};

constexpr Key kKeys[] = {{"mean_Q", &LevelSummary::mean_Q},
                         {"var_Q", &LevelSummary::var_Q},
                         {"mean_absY", &LevelSummary::mean_absY},
                         {"var_Y", &LevelSummary::var_Y},
                         {"acceptance", &LevelSummary::acceptance},
                         {"iact", &LevelSummary::iact},
                         {"ess", &LevelSummary::ess},
                         {"cost_per_sample", &LevelSummary::cost_per_sample},
                         {"n_samples", &LevelSummary::n}};

} // namespace

nlohmann::json to_json(const RunSummary& s) {
  nlohmann::json j;
  nlohmann::json levels = nlohmann::json::array();
  for (std::size_t l = 0; l < s.levels.size(); ++l) levels.push_back(l);
  j["levels"] = levels;
  for (const auto& k : kKeys) {
    j[k.name] = level_array(s.levels, k.field);
    j[std::string(k.name) + "_sd"] = level_array(s.levels_sd, k.field);
  }
  j["var_Q0"] = s.levels.empty() ? 0.0 : s.levels[0].var_Q;
  j["effective_cost"] = s.effective_cost;
  j["ml_estimate"] = s.ml_estimate;
  j["ml_estimate_sd"] = s.ml_estimate_sd;
  j["epsilon"] = s.epsilon;
  j["planned_N"] = s.planned_N;
  j["predicted_total_cost"] = s.predicted_total_cost;
  j["chains"] = s.chains;
  j["seed"] = s.seed;
  j["failures"] = s.failures;
  return j;
}

RunSummary summary_from_json(const nlohmann::json& j) {
  RunSummary s;
  const std::size_t levels = j.at("levels").size();
  s.levels.resize(levels);
  s.levels_sd.resize(levels);
  for (const auto& k : kKeys) {
    read_level_array(j, k.name, s.levels, k.field);
    read_level_array(j, (std::string(k.name) + "_sd").c_str(), s.levels_sd, k.field);
  }
  s.effective_cost = j.at("effective_cost").get<std::vector<double>>();
  s.ml_estimate = j.at("ml_estimate").get<double>();
  s.ml_estimate_sd = j.at("ml_estimate_sd").get<double>();
  s.epsilon = j.at("epsilon").get<double>();
  s.planned_N = j.at("planned_N").get<std::vector<std::uint64_t>>();
  s.predicted_total_cost = j.at("predicted_total_cost").get<double>();
  s.chains = j.at("chains").get<int>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.failures = j.value("failures", std::vector<std::uint64_t>{});
  return s;
}

void write_acf_csv(std::ostream& out, std::span<const double> rho, std::string_view header) {
  out.precision(17);
  if (!header.empty()) out << "# " << header << '\n';
  out << "lag,acf\n";
  for (std::size_t c = 0; c < rho.size(); ++c) out << c << ',' << rho[c] << '\n';
}

} // namespace hgrf
