#include "nlstab/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace nlstab {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& section,
                const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError("section '" + section + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!allowed.count(key))
      throw ConfigError("unknown key '" + key + "' in section '" + section + "'");
  }
}

template <typename T>
void pick(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

RadialGrid RunConfig::make_grid() const {
  const int n = static_cast<int>(std::lround(n_points * grid_scale));
  return RadialGrid::uniform(r_max, n);
}

void RunConfig::validate() const {
  if (!(omega > 0.0)) throw ConfigError("omega must be positive");
  if (node_count < 0) throw ConfigError("node_count must be nonnegative");
  if (!(r_max > 0.0)) throw ConfigError("r_max must be positive");
  if (n_points < 16) throw ConfigError("n_points too small");
  if (!(grid_scale > 0.0)) throw ConfigError("grid scale must be positive");
  if (has_sweep) {
    if (sweep_count < 1) throw ConfigError("sweep count must be at least 1");
    if (!(omega_min > 0.0) || omega_max < omega_min)
      throw ConfigError("sweep range must be nonempty and positive");
  }
  if (nl.kind == Nonlinearity::Kind::pure_power && !(nl.p > 1.0 && nl.p < 5.0))
    throw ConfigError("pure_power exponent must lie in (1, 5)");
  for (const double tol :
       {spectral.edge_tol, spectral.kernel_tol, spectral.imag_tol, spectral.off_axis_tol,
        spectral.signature_tol, spectral.pairing_tol, spectral.refine_tol, kernel.null_tol,
        kernel.residual_tol, kernel.angle_tol, kernel.pairing_tol, fgr.plateau_rel})
    if (!(tol > 0.0)) throw ConfigError("tolerances must be positive");
  if (fgr.eps_factors.size() < 4 && !fgr.absorber)
    throw ConfigError("limiting absorption needs at least 4 epsilon values");
  for (const double f : fgr.eps_factors)
    if (!(f > 0.0)) throw ConfigError("epsilon factors must be positive");
  if (!(dynamics.delta >= 0.0)) throw ConfigError("seed amplitude must be nonnegative");
  if (!(dynamics.tube_factor > 0.0)) throw ConfigError("tube factor must be positive");
  if (!(dynamics.evolve.dt > 0.0)) throw ConfigError("evolution step must be positive");
  if (dynamics.evolve.backend != "cn" && dynamics.evolve.backend != "dst")
    throw ConfigError("unknown evolution backend: " + dynamics.evolve.backend);
  if (out_dir.empty()) throw ConfigError("output directory must not be empty");
}

RunConfig config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse failure: ") + e.what());
  }
  check_keys(j, "(root)",
             {"schema_version", "model", "sweep", "grid", "spectral", "kernel", "fgr",
              "dynamics", "output", "seed"});
  RunConfig cfg;
  try {
    if (j.contains("schema_version") && j.at("schema_version").get<int>() != kSchemaVersion)
      throw ConfigError("unsupported schema_version");

    if (j.contains("model")) {
      const json& m = j.at("model");
      check_keys(m, "model", {"nonlinearity", "p", "c3", "c5", "omega", "node_count"});
      std::string name = "cubic";
      double p = 3.0, c3 = 1.0, c5 = 0.0;
      pick(m, "nonlinearity", name);
      pick(m, "p", p);
      pick(m, "c3", c3);
      pick(m, "c5", c5);
      cfg.nl = Nonlinearity::parse(name, p, c3, c5);
      pick(m, "omega", cfg.omega);
      pick(m, "node_count", cfg.node_count);
    }
    if (j.contains("sweep")) {
      const json& s = j.at("sweep");
      check_keys(s, "sweep", {"omega_min", "omega_max", "count"});
      cfg.has_sweep = true;
      pick(s, "omega_min", cfg.omega_min);
      pick(s, "omega_max", cfg.omega_max);
      pick(s, "count", cfg.sweep_count);
    }
    if (j.contains("grid")) {
      const json& g = j.at("grid");
      check_keys(g, "grid", {"r_max", "n_points"});
      pick(g, "r_max", cfg.r_max);
      pick(g, "n_points", cfg.n_points);
    }
    if (j.contains("spectral")) {
      const json& s = j.at("spectral");
      check_keys(s, "spectral",
                 {"method", "product_threshold", "edge_tol", "kernel_tol", "imag_tol",
                  "off_axis_tol", "signature_tol", "pairing_tol", "refine_tol",
                  "refine_iters", "refine"});
      pick(s, "method", cfg.spectral.method);
      pick(s, "product_threshold", cfg.spectral.product_threshold);
      pick(s, "edge_tol", cfg.spectral.edge_tol);
      pick(s, "kernel_tol", cfg.spectral.kernel_tol);
      pick(s, "imag_tol", cfg.spectral.imag_tol);
      pick(s, "off_axis_tol", cfg.spectral.off_axis_tol);
      pick(s, "signature_tol", cfg.spectral.signature_tol);
      pick(s, "pairing_tol", cfg.spectral.pairing_tol);
      pick(s, "refine_tol", cfg.spectral.refine_tol);
      pick(s, "refine_iters", cfg.spectral.refine_iters);
      pick(s, "refine", cfg.spectral.refine);
    }
    if (j.contains("kernel")) {
      const json& kj = j.at("kernel");
      check_keys(kj, "kernel",
                 {"null_tol", "residual_tol", "angle_tol", "pairing_tol", "gap_guard"});
      pick(kj, "null_tol", cfg.kernel.null_tol);
      pick(kj, "residual_tol", cfg.kernel.residual_tol);
      pick(kj, "angle_tol", cfg.kernel.angle_tol);
      pick(kj, "pairing_tol", cfg.kernel.pairing_tol);
      pick(kj, "gap_guard", cfg.kernel.gap_guard);
    }
    if (j.contains("fgr")) {
      const json& f = j.at("fgr");
      check_keys(f, "fgr",
                 {"eps_factors", "plateau_rel", "absorber", "absorber_strength",
                  "absorber_start"});
      pick(f, "eps_factors", cfg.fgr.eps_factors);
      pick(f, "plateau_rel", cfg.fgr.plateau_rel);
      pick(f, "absorber", cfg.fgr.absorber);
      pick(f, "absorber_strength", cfg.fgr.absorber_strength);
      pick(f, "absorber_start", cfg.fgr.absorber_start);
    }
    if (j.contains("dynamics")) {
      const json& d = j.at("dynamics");
      check_keys(d, "dynamics",
                 {"delta", "tube_factor", "horizon_factor", "horizon_override", "mode_index",
                  "samples", "dt", "backend", "rel_tol", "ceiling"});
      pick(d, "delta", cfg.dynamics.delta);
      pick(d, "tube_factor", cfg.dynamics.tube_factor);
      pick(d, "horizon_factor", cfg.dynamics.horizon_factor);
      pick(d, "horizon_override", cfg.dynamics.horizon_override);
      pick(d, "mode_index", cfg.dynamics.mode_index);
      pick(d, "samples", cfg.dynamics.samples);
      pick(d, "dt", cfg.dynamics.evolve.dt);
      pick(d, "backend", cfg.dynamics.evolve.backend);
      pick(d, "rel_tol", cfg.dynamics.reduced.rel_tol);
      pick(d, "ceiling", cfg.dynamics.reduced.ceiling);
    }
    if (j.contains("output")) {
      const json& o = j.at("output");
      check_keys(o, "output", {"directory"});
      pick(o, "directory", cfg.out_dir);
    }
    pick(j, "seed", cfg.seed);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field error: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json_text(ss.str());
}

std::string config_to_json_text(const RunConfig& cfg) {
  json j;
  j["schema_version"] = kSchemaVersion;
  json m;
  m["nonlinearity"] = cfg.nl.name();
  if (cfg.nl.kind == Nonlinearity::Kind::pure_power) m["p"] = cfg.nl.p;
  if (cfg.nl.kind == Nonlinearity::Kind::cubic_quintic) {
    m["c3"] = cfg.nl.c3;
    m["c5"] = cfg.nl.c5;
  }
  m["omega"] = cfg.omega;
  m["node_count"] = cfg.node_count;
  j["model"] = m;
  if (cfg.has_sweep)
    j["sweep"] = {{"omega_min", cfg.omega_min}, {"omega_max", cfg.omega_max},
                  {"count", cfg.sweep_count}};
  j["grid"] = {{"r_max", cfg.r_max}, {"n_points", cfg.n_points}};
  j["spectral"] = {{"method", cfg.spectral.method},
                   {"product_threshold", cfg.spectral.product_threshold},
                   {"edge_tol", cfg.spectral.edge_tol},
                   {"kernel_tol", cfg.spectral.kernel_tol},
                   {"imag_tol", cfg.spectral.imag_tol},
                   {"off_axis_tol", cfg.spectral.off_axis_tol},
                   {"signature_tol", cfg.spectral.signature_tol},
                   {"pairing_tol", cfg.spectral.pairing_tol},
                   {"refine_tol", cfg.spectral.refine_tol},
                   {"refine_iters", cfg.spectral.refine_iters},
                   {"refine", cfg.spectral.refine}};
  j["kernel"] = {{"null_tol", cfg.kernel.null_tol},
                 {"residual_tol", cfg.kernel.residual_tol},
                 {"angle_tol", cfg.kernel.angle_tol},
                 {"pairing_tol", cfg.kernel.pairing_tol},
                 {"gap_guard", cfg.kernel.gap_guard}};
  j["fgr"] = {{"eps_factors", cfg.fgr.eps_factors},
              {"plateau_rel", cfg.fgr.plateau_rel},
              {"absorber", cfg.fgr.absorber},
              {"absorber_strength", cfg.fgr.absorber_strength},
              {"absorber_start", cfg.fgr.absorber_start}};
  j["dynamics"] = {{"delta", cfg.dynamics.delta},
                   {"tube_factor", cfg.dynamics.tube_factor},
                   {"horizon_factor", cfg.dynamics.horizon_factor},
                   {"horizon_override", cfg.dynamics.horizon_override},
                   {"mode_index", cfg.dynamics.mode_index},
                   {"samples", cfg.dynamics.samples},
                   {"dt", cfg.dynamics.evolve.dt},
                   {"backend", cfg.dynamics.evolve.backend},
                   {"rel_tol", cfg.dynamics.reduced.rel_tol},
                   {"ceiling", cfg.dynamics.reduced.ceiling}};
  j["output"] = {{"directory", cfg.out_dir}};
  j["seed"] = cfg.seed;
  return j.dump(2) + "\n";
}

void save_config(const RunConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config file: " + path);
  out << config_to_json_text(cfg);
}

}  // namespace nlstab
