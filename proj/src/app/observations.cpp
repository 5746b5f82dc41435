// SPDX-License-Identifier: Apache-2.0
#include "hgrf/app.hpp"

#include <cmath>
#include <fstream>

namespace hgrf {

GeneratedObservations generate_observations(const RunConfig& c, std::uint64_t seed,
                                            std::optional<double> sigma_eta_override) {
  c.validate();
  const double sigma_eta = sigma_eta_override.value_or(std::sqrt(c.sigma_eta2));
  if (!(sigma_eta >= 0.0)) throw InvalidArgument("generate_observations: sigma_eta must be >= 0");

  const int base_cells = static_cast<int>(std::lround(1.0 / c.h0));
  const int level = c.L + 1;
  const MeshLevel mesh = make_unit_square(base_cells << level, level);
  const SpdeOperators ops = assemble_spde_operator(mesh, c.kappa(), c.nu, c.sigma());

  const auto ulevel = static_cast<std::uint64_t>(level);
  Engine field_rng = make_engine({seed, 0, ulevel, 0, StreamPurpose::Field});
  const Vector theta = spde_sample(ops, standard_normal(ops.size(), field_rng)).theta;
  const DarcySolution sol = solve_darcy(mesh, project_permeability(mesh, theta));

  GeneratedObservations g;
  g.obs.points = observation_lattice();
  g.obs.values = observe(sol, mesh, g.obs.points);
  Engine noise_rng = make_engine({seed, 0, ulevel, 0, StreamPurpose::Observation});
  g.obs.values += sigma_eta * standard_normal(g.obs.values.size(), noise_rng);
  g.obs.sigma_eta = sigma_eta;
  g.obs.reference_h = mesh.h;
  g.obs.seed = seed;
  g.reference_qoi = compute_qoi(sol, mesh);
  return g;
}

nlohmann::json observations_to_json(const ObservationSet& obs, const RunConfig& c,
                                    double reference_qoi) {
  nlohmann::json j;
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : obs.points) pts.push_back({p.x, p.y});
  j["points"] = pts;
  j["values"] = std::vector<double>(obs.values.data(), obs.values.data() + obs.values.size());
  j["sigma_eta"] = obs.sigma_eta;
  j["reference_h"] = obs.reference_h;
  j["seed"] = obs.seed;
  j["reference_qoi"] = reference_qoi;
  j["config_hash"] = hex(config_hash(c));
  return j;
}

ObservationSet observations_from_json(const nlohmann::json& j) {
  ObservationSet obs;
  try {
    for (const auto& p : j.at("points")) {
      if (p.size() != 2) throw InvalidArgument("observations: each point needs two coordinates");
      obs.points.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    const auto values = j.at("values").get<std::vector<double>>();
    obs.values = Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
    obs.sigma_eta = j.at("sigma_eta").get<double>();
    obs.reference_h = j.at("reference_h").get<double>();
    obs.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("observations: malformed file: ") + e.what());
  }
  if (obs.points.size() != static_cast<std::size_t>(obs.values.size()))
    throw InvalidArgument("observations: points and values differ in length");
  for (const auto& p : obs.points)
    if (!(p.x > 0.0 && p.x < 1.0 && p.y > 0.0 && p.y < 1.0))
      throw InvalidArgument("observations: points must lie strictly inside the unit square");
  return obs;
}

void write_observations(const std::filesystem::path& path, const GeneratedObservations& g,
                        const RunConfig& c) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << observations_to_json(g.obs, c, g.reference_qoi).dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

ObservationSet read_observations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read observation file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("observations: " + path.string() + " is not valid JSON: " + e.what());
  }
  return observations_from_json(j);
}

} // namespace hgrf
