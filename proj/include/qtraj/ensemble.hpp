#pragma once

// Seeded Monte Carlo over trajectories. Trajectory i draws its noise from
// stream stream_base + i, results are stored by index and every statistic is
// reduced in index order, so the output does not depend on how many workers
// ran or in which order they finished.

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "qtraj/feedback.hpp"
#include "qtraj/sme.hpp"
#include "qtraj/thermo.hpp"

namespace qtraj {

/// thermal: each trajectory starts in level n of H_0 with Boltzmann weight
/// P0_n (sampled per trajectory); eigenstate: level n of H_0; explicit: the
/// given state.
struct InitialState {
  enum class Kind { thermal, eigenstate, explicit_state };

  Kind kind = Kind::eigenstate;
  double beta = 1.0;
  int level = 0;
  DensityMatrix state;

  static InitialState thermal(double beta) { return {Kind::thermal, beta, 0, {}}; }
  static InitialState eigenstate(int n) { return {Kind::eigenstate, 1.0, n, {}}; }
  static InitialState given(const DensityMatrix& rho) { return {Kind::explicit_state, 1.0, 0, rho}; }
};

struct EnsembleConfig {
  std::size_t n_traj = 300;
  std::uint64_t seed = 0;
  Scheme scheme = Scheme::stratonovich_heun;
  std::size_t steps = 3000;
  std::size_t record_stride = 1;
  InitialState initial;
  /// 0 picks std::thread::hardware_concurrency(). Never affects results.
  unsigned workers = 0;
  std::uint64_t stream_base = 0;
  /// Keep per-step increments of every trajectory (memory heavy).
  bool keep_records = false;

  void validate() const;
};

struct TrajectorySummary {
  int initial_level = -1;
  double work = 0.0;
  double heat = 0.0;
  double delta_u = 0.0;
  double max_residual = 0.0;
  std::size_t clamp_events = 0;
  double max_violation = 0.0;
  double purity_drift = 0.0;
  TrajectoryTransitions transitions;
  DensityMatrix final_state;
};

struct EnsembleResult {
  std::vector<double> times;
  std::vector<DensityMatrix> mean_state;
  /// Standard errors of (rho11, Re rho12, Im rho12) at each recorded time.
  std::vector<std::array<double, 3>> se_state;
  std::vector<TrajectorySummary> trajectories;
  /// Full records, only when EnsembleConfig::keep_records is set.
  std::vector<TrajectoryRecord> records;

  double work_mean = 0.0;
  double work_var = 0.0;
  double heat_mean = 0.0;
  double heat_var = 0.0;
  std::size_t clamp_events = 0;
  std::size_t total_steps = 0;
  double max_residual = 0.0;
  double max_violation = 0.0;
  double max_purity_drift = 0.0;
};

/// Raised when one trajectory of an ensemble fails to integrate.
class EnsembleError : public std::runtime_error {
 public:
  EnsembleError(const std::string& what, std::size_t trajectory, std::size_t clamp_events)
      : std::runtime_error(what), trajectory_(trajectory), clamp_events_(clamp_events) {}

  std::size_t trajectory() const { return trajectory_; }
  /// Clamp events in the trajectories that completed before the failure.
  std::size_t clamp_events() const { return clamp_events_; }

 private:
  std::size_t trajectory_;
  std::size_t clamp_events_;
};

EnsembleResult run_ensemble(const EnsembleConfig& cfg, const DriveProtocol& protocol,
                            const DetectorModel& det, const FeedbackParams& fb = {});

/// Ensemble-averaged master equation: unitary part plus dephasing at rate
/// delta_i^2 / (4 s0), held Hamiltonian per step as in the trajectory
/// integrator, four RK4 substeps per grid interval. Returns the states at
/// every record_stride-th grid point.
std::vector<DensityMatrix> lindblad_reference(const DensityMatrix& init, const DriveProtocol& protocol,
                                              const DetectorModel& det, std::size_t steps,
                                              std::size_t record_stride = 1);

/// Transition probabilities P[m][n] of the detector-free dynamics on the
/// integration grid, from level n of H_0 to level m of H_tau.
Matrix2 unitary_transition_matrix(const DriveProtocol& protocol, std::size_t steps);

struct TransitionExperiment {
  TransitionDecomposition decomposition;
  SpectralDecomposition basis_0;
  SpectralDecomposition basis_tau;
  /// Column n holds the per-trajectory data of the ensemble started in level n.
  std::array<std::vector<TrajectoryTransitions>, 2> trajectories;
  std::size_t clamp_events = 0;
  std::size_t total_steps = 0;
  double max_residual = 0.0;
};

/// Runs one ensemble per initial eigenstate of H_0 (cfg.initial is ignored).
/// Column n uses streams stream_base + n * n_traj + i.
TransitionExperiment run_transition_experiment(const EnsembleConfig& cfg, const DriveProtocol& protocol,
                                               const DetectorModel& det, const FeedbackParams& fb = {});

}  // namespace qtraj
