#pragma once

#include <cstdint>
#include <string>

#include "nlstab/dynamics.hpp"

namespace nlstab {

// Run configuration, one nested section per pipeline stage.  Unknown keys
// anywhere in the file are errors so sweep scripts cannot silently typo a
// tolerance.
struct RunConfig {
  Nonlinearity nl;
  double omega = 1.0;
  int node_count = 0;

  bool has_sweep = false;
  double omega_min = 0.0;
  double omega_max = 0.0;
  int sweep_count = 0;

  double r_max = 30.0;
  int n_points = 800;
  double grid_scale = 1.0;  // CLI override, multiplies n_points

  SpectralOptions spectral;
  KernelOptions kernel;
  FgrOptions fgr;
  ExperimentOptions dynamics;

  std::string out_dir = "out";
  std::uint64_t seed = 777;

  RadialGrid make_grid() const;
  void validate() const;  // throws ConfigError
};

RunConfig config_from_json_text(const std::string& text);
RunConfig load_config(const std::string& path);
std::string config_to_json_text(const RunConfig& cfg);
void save_config(const RunConfig& cfg, const std::string& path);

}  // namespace nlstab
