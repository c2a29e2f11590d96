#pragma once

#include <string>
#include <vector>

#include "tendonsim/scenario.hpp"

namespace tendonsim {

struct Monitor {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct RunOptions {
  /// Replaces scenario.outputs when non-empty.
  std::string output_dir;
  /// Relative dataset paths in identify scenarios resolve against this.
  std::string base_dir;
};

struct RunResult {
  std::string scenario;
  std::string output_dir;
  std::vector<Monitor> monitors;
  /// Empty on success, otherwise the phase that raised.
  std::string failure_phase;
  std::string failure;
  std::vector<std::string> files;
  int exit_status = 1;
};

/// Executes one scenario and writes its artifacts. Never throws for module
/// errors; they end up in failure_phase / failure and in summary.txt.
RunResult run(const Scenario& scenario, const RunOptions& options = {});

}  // namespace tendonsim
