#pragma once

// Figure and number reproductions: runs a configured experiment and writes
// plot-ready CSV/JSON plus the resolved config next to them.

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "qtraj/config.hpp"

namespace qtraj {

/// A run finished but one of the checked invariants did not hold.
class InvariantViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunOptions {
  unsigned workers = 0;  // 0 = hardware concurrency; never changes results
};

/// Writes the outputs of cfg.experiment into out_dir (created if needed) and
/// returns the paths written. Throws ConfigError, EnsembleError or
/// InvariantViolation.
std::vector<std::filesystem::path> run_experiment(const ExperimentConfig& cfg,
                                                  const std::filesystem::path& out_dir,
                                                  const RunOptions& opts = {});

}  // namespace qtraj
