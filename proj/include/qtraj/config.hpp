#pragma once

// Experiment configuration: flat "dotted.key = value" text, presets for the
// figure reproductions, validation with key paths.

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "qtraj/ensemble.hpp"

namespace qtraj {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string experiment = "fig1";  // fig1 | fig2 | fig3a | fig3b | jarzynski

  // physical parameters, hbar = 1
  double epsilon = 0.1;
  double g = 0.625;
  double nu = 8.0;
  double dt = 0.01;
  std::size_t tau_steps = 3000;
  double delta_i = 0.02;
  double s0 = 1.0;
  double i0 = 1.0;
  double beta = 10.0;

  // run parameters
  Scheme scheme = Scheme::stratonovich_heun;
  std::size_t n_traj = 300;
  std::uint64_t seed = 2015;
  std::size_t record_stride = 1;
  int initial_level = 0;  // starting level of H_0 for fig1

  double feedback_f = 3.0;
  bool feedback_enabled = false;

  double tau() const { return dt * static_cast<double>(tau_steps); }
  DriveProtocol protocol() const { return {g, nu, tau(), epsilon, 1.0}; }
  DetectorModel detector() const { return {delta_i, s0, i0}; }
  FeedbackParams feedback() const { return {feedback_f, feedback_enabled}; }

  /// Throws ConfigError naming the offending key.
  void validate() const;
};

inline const std::vector<std::string_view>& experiment_names() {
  static const std::vector<std::string_view> names{"fig1", "fig2", "fig3a", "fig3b", "jarzynski"};
  return names;
}

/// Defaults for a named experiment. Throws ConfigError for unknown names.
ExperimentConfig preset(std::string_view name);

/// Keys in the order they are written.
const std::vector<std::string_view>& config_keys();

/// Parses "key = value" lines; '#' starts a comment. Keys not present keep
/// the values of `base` (the preset named by an `experiment` line when one
/// appears first, otherwise `base`). Unknown keys and malformed values raise
/// ConfigError with the line number and key.
ExperimentConfig parse_config(std::string_view text, const ExperimentConfig& base = {});
ExperimentConfig load_config(const std::string& path);

/// One line per key, doubles with 17 significant digits, so that parsing the
/// output reproduces the config exactly.
std::string serialize_config(const ExperimentConfig& cfg);

/// Caption ratios of the trajectory figure in units of dt:
/// s0/delta_i^2, hbar/g, hbar/epsilon, tau.
struct CaptionRatios {
  double s0_over_di2 = 0.0;
  double hbar_over_g = 0.0;
  double hbar_over_eps = 0.0;
  double tau = 0.0;
};
CaptionRatios caption_ratios(const ExperimentConfig& cfg);

/// Formats a double with 17 significant digits.
std::string format_double(double v);

}  // namespace qtraj
