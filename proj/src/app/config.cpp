// SPDX-License-Identifier: Apache-2.0
#include "hgrf/app.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace hgrf {
namespace {

std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_floating_point_v<T>)
      out += fmt(v[i]);
    else
      out += std::to_string(v[i]);
  }
  return out;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw InvalidArgument("config: invalid value '" + std::string(value) + "' for key '" +
                        std::string(key) + "'");
}

template <class T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const auto r = std::from_chars(value.data(), value.data() + value.size(), out);
  if (r.ec != std::errc() || r.ptr != value.data() + value.size()) bad_value(key, value);
  return out;
}

template <class T>
std::vector<T> parse_list(std::string_view key, std::string_view value) {
  std::vector<T> out;
  while (true) {
    const auto comma = value.find(',');
    out.push_back(parse_number<T>(key, trim(value.substr(0, comma))));
    if (comma == std::string_view::npos) break;
    value.remove_prefix(comma + 1);
  }
  return out;
}

} // namespace

double RunConfig::sigma() const { return std::sqrt(sigma2); }

std::filesystem::path RunConfig::observations_path() const {
  if (!observations.empty()) return observations;
  return std::filesystem::path(output_dir) / "observations.json";
}

void RunConfig::validate() const {
  auto fail = [](const std::string& m) { throw InvalidArgument("config: " + m); };
  if (!(h0 > 0.0 && h0 <= 1.0)) fail("h0 must lie in (0, 1]");
  const double cells = 1.0 / h0;
  if (std::abs(cells - std::round(cells)) > 1e-9 * cells) fail("1/h0 must be an integer");
  if (L < 0 || L > 8) fail("L must lie in [0, 8]");
  if (nu != 1.0) fail("only nu = 1 is supported");
  if (!(correlation_length > 0.0)) fail("correlation_length must be > 0");
  if (!(sigma2 > 0.0)) fail("sigma2 must be > 0");
  if (!(sigma_eta2 > 0.0)) fail("sigma_eta2 must be > 0");
  if (kl_modes < 1) fail("kl_modes must be >= 1");
  if (beta.empty() || (beta.size() != 1 && beta.size() != static_cast<std::size_t>(L) + 1))
    fail("beta needs one value or one per level");
  for (double b : beta)
    if (!(b > 0.0 && b <= 1.0)) fail("beta values must lie in (0, 1]");
  if (subchain.empty() || (subchain.size() != 1 && subchain.size() != static_cast<std::size_t>(L)))
    fail("subchain needs one value or one per coarse level");
  for (int s : subchain)
    if (s < 1) fail("subchain lengths must be >= 1");
  if (n_chains < 1) fail("n_chains must be >= 1");
  if (!(burnin_fraction >= 0.0 && burnin_fraction < 1.0)) fail("burnin_fraction must lie in [0, 1)");
  if (!(epsilon > 0.0)) fail("epsilon must be > 0");
  if (output_dir.empty()) fail("output_dir must not be empty");
}

std::string serialize(const RunConfig& c) {
  std::ostringstream o;
  o << "h0 = " << fmt(c.h0) << '\n'
    << "L = " << c.L << '\n'
    << "nu = " << fmt(c.nu) << '\n'
    << "correlation_length = " << fmt(c.correlation_length) << '\n'
    << "sigma2 = " << fmt(c.sigma2) << '\n'
    << "sigma_eta2 = " << fmt(c.sigma_eta2) << '\n'
    << "coarsest_sampler = " << to_string(c.coarsest_sampler) << '\n'
    << "kl_modes = " << c.kl_modes << '\n'
    << "beta = " << join(c.beta) << '\n'
    << "subchain = " << join(c.subchain) << '\n'
    << "n_chains = " << c.n_chains << '\n'
    << "n_samples = " << c.n_samples << '\n'
    << "burnin_fraction = " << fmt(c.burnin_fraction) << '\n'
    << "epsilon = " << fmt(c.epsilon) << '\n'
    << "seed = " << c.seed << '\n'
    << "output_dir = " << c.output_dir << '\n'
    << "observations = " << c.observations << '\n'
    << "threads = " << c.threads << '\n';
  return o.str();
}

RunConfig parse_config(std::string_view text, RunConfig c) {
  std::size_t lineno = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw InvalidArgument("config: line " + std::to_string(lineno) + " is not 'key = value'");
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));

    if (key == "h0") c.h0 = parse_number<double>(key, value);
    else if (key == "L") c.L = parse_number<int>(key, value);
    else if (key == "nu") c.nu = parse_number<double>(key, value);
    else if (key == "correlation_length") c.correlation_length = parse_number<double>(key, value);
    else if (key == "sigma2") c.sigma2 = parse_number<double>(key, value);
    else if (key == "sigma_eta2") c.sigma_eta2 = parse_number<double>(key, value);
    else if (key == "coarsest_sampler") c.coarsest_sampler = parse_coarsest_sampler(value);
    else if (key == "kl_modes") c.kl_modes = parse_number<Index>(key, value);
    else if (key == "beta") c.beta = parse_list<double>(key, value);
    else if (key == "subchain") c.subchain = parse_list<int>(key, value);
    else if (key == "n_chains") c.n_chains = parse_number<int>(key, value);
    else if (key == "n_samples") c.n_samples = parse_number<std::uint64_t>(key, value);
    else if (key == "burnin_fraction") c.burnin_fraction = parse_number<double>(key, value);
    else if (key == "epsilon") c.epsilon = parse_number<double>(key, value);
    else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "output_dir") c.output_dir = std::string(value);
    else if (key == "observations") c.observations = std::string(value);
    else if (key == "threads") c.threads = parse_number<unsigned>(key, value);
    else throw InvalidArgument("config: unknown key '" + std::string(key) + "'");
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::uint64_t config_hash(const RunConfig& c) {
  RunConfig k = c;
  k.output_dir = "";
  k.observations = "";
  k.threads = 0;
  const std::string s = serialize(k);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string provenance(const RunConfig& c, std::string_view extra) {
  std::string s = "seed=" + std::to_string(c.seed) + " config_hash=" + hex(config_hash(c));
  if (!extra.empty()) {
    s += ' ';
    s += extra;
  }
  return s;
}

DarcyProblem darcy_problem(const RunConfig& c) {
  DarcyProblem p;
  p.h0 = c.h0;
  p.L = c.L;
  p.kappa = c.kappa();
  p.nu = c.nu;
  p.sigma = c.sigma();
  p.coarsest = c.coarsest_sampler;
  p.kl_modes = c.kl_modes;
  return p;
}

} // namespace hgrf
