#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "nlstab/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"standing-wave stability analyzer for the 3d radial NLS"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_dir;
  double grid_scale = 0.0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--out", out_dir, "output directory (overrides config)");
  app.add_option("--grid-scale", grid_scale,
                 "multiply the configured point count, for convergence studies");
  app.add_option("--seed", seed, "seed for randomized checks")
      ->each([&](const std::string&) { seed_set = true; });

  const std::vector<std::pair<std::string, std::string>> verbs = {
      {"profile", "solve the standing-wave profile"},
      {"spectrum", "profile + discrete spectrum of the linearization"},
      {"verdict", "spectrum + kernel, indices and the stability verdict"},
      {"fgr", "verdict + damping coefficients at every resonance"},
      {"reduce", "fgr + reduced discrete-mode trajectory"},
      {"evolve", "profile + standing-wave evolution fidelity run"},
      {"experiment", "full instability experiment with reduced overlay"},
      {"sweep", "verdict (+ diagonal damping) across an omega range"},
  };
  for (const auto& [name, desc] : verbs) app.add_subcommand(name, desc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  const std::string verb = app.get_subcommands().front()->get_name();
  try {
    nlstab::RunConfig cfg;
    if (!config_path.empty()) cfg = nlstab::load_config(config_path);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (grid_scale > 0.0) cfg.grid_scale = grid_scale;
    if (seed_set) cfg.seed = seed;
    cfg.validate();

    const nlstab::PipelineOutcome outcome = nlstab::run_pipeline(cfg, verb);
    for (const auto& st : outcome.stages) {
      if (st.ok)
        std::cerr << "[ok]   " << st.name << "\n";
      else
        std::cerr << "[fail] " << st.name << ": " << st.message << "\n";
    }
    if (!outcome.verdict.empty()) std::cout << outcome.verdict << "\n";
    return outcome.exit_code;
  } catch (const nlstab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const nlstab::Error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
}
