#pragma once

#include "nlstab/config.hpp"

namespace nlstab {

struct StageStatus {
  std::string name;
  bool ok = false;
  std::string message;  // error text when not ok
};

struct PipelineOutcome {
  int exit_code = 0;  // 0 success, 2 config error, 3 numerical failure
  std::vector<StageStatus> stages;
  std::string summary_path;
  std::string verdict;  // linear-stability verdict when computed
};

// Verbs: profile, spectrum, verdict, fgr, reduce, evolve, experiment, sweep.
// Each verb runs its prerequisite stages, writes per-stage artifacts plus a
// top-level summary.json into cfg.out_dir, and stops at the first failing
// stage (recorded, later stages skipped).
PipelineOutcome run_pipeline(const RunConfig& cfg, const std::string& verb);

}  // namespace nlstab
