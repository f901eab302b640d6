#pragma once

// Thermodynamic bookkeeping along trajectories: per-step work and heat,
// cumulative ledgers, work/heat contributions to transition probabilities,
// two-point-measurement distributions and Jarzynski estimates.

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "qtraj/qubit.hpp"
#include "qtraj/step.hpp"

namespace qtraj {

/// Largest first-law violation tolerated in a single step before the ledger
/// reports an internal-consistency error.
inline constexpr double kFirstLawTolerance = 1e-10;

/// tr{rho_prev (h_now - h_prev)}.
double step_work(const DensityMatrix& rho_prev, const QubitOperator& h_prev,
                 const QubitOperator& h_now);

/// tr{h_now d_rho_q}.
double step_heat(const StateDelta& d_rho_q, const QubitOperator& h_now);

struct StepEnergetics {
  double work = 0.0;
  double heat = 0.0;
  double d_u = 0.0;
  double residual = 0.0;
};

struct ThermoLedger {
  double w_cum = 0.0;
  double q_cum = 0.0;
  double u0 = 0.0;
  double u_now = 0.0;
  double max_residual = 0.0;
  std::size_t steps = 0;

  static ThermoLedger start(const DensityMatrix& rho0, const QubitOperator& h0);
};

/// Books one step: dU = tr{h_now rho_now} - tr{h_prev rho_prev} against
/// step_work + step_heat. Throws std::logic_error when the residual of the
/// step exceeds kFirstLawTolerance.
StepEnergetics ledger_update(ThermoLedger& ledger, const DensityMatrix& rho_prev,
                             const DensityMatrix& rho_now, const QubitOperator& h_prev,
                             const QubitOperator& h_now, const StepDecomposition& step);

using Matrix2 = std::array<std::array<double, 2>, 2>;  // [m][n]

/// Work and heat contributions of one trajectory to the populations of the
/// energy levels m. Populations are taken in the eigenbasis of the
/// Hamiltonian at each grid point, so the sum telescopes exactly:
///   p_tau[m] - p_initial[m] = dp_w[m] + dp_q[m].
/// dp_w collects the basis change driven by dH plus the unitary increments,
/// dp_q the detector increments.
struct TrajectoryTransitions {
  int initial_level = -1;  // n when started in an eigenstate of H_0, else -1
  std::array<double, 2> p_initial{};
  std::array<double, 2> p_tau{};
  std::array<double, 2> dp_w{};
  std::array<double, 2> dp_q{};

  /// max_m |p_tau - p_initial - dp_w - dp_q|.
  double identity_error() const;
};

class TransitionTracker {
 public:
  /// `basis0` is the spectrum of H_0. When rho0 equals one of its
  /// projectors the trajectory is labelled with that level.
  TransitionTracker(const SpectralDecomposition& basis0, const DensityMatrix& rho0);

  void update(const DensityMatrix& rho_prev, const SpectralDecomposition& basis_now,
              const StepDecomposition& step);

  const TrajectoryTransitions& result() const { return acc_; }
  const TrajectoryTransitions& finish(const DensityMatrix& rho_final);

 private:
  SpectralDecomposition basis_prev_;
  TrajectoryTransitions acc_;
};

/// Ensemble averages of the per-trajectory contributions. p0 is the
/// identity: trajectories of column n start in level n of H_0.
struct TransitionDecomposition {
  Matrix2 p0{{{1.0, 0.0}, {0.0, 1.0}}};
  Matrix2 p_tau{};
  Matrix2 dp_w{};
  Matrix2 dp_q{};
  Matrix2 se_p_tau{};
  Matrix2 se_dp_w{};
  Matrix2 se_dp_q{};
  std::array<std::size_t, 2> n_traj{};
  /// Largest per-trajectory |p_tau - p0 - dp_w - dp_q| seen while averaging.
  double max_trajectory_identity_error = 0.0;

  /// Throws std::logic_error naming the first violated invariant.
  void check_invariants(double tol = 1e-10) const;
};

/// Averages trajectories started in level n into column n of `out`.
/// Throws std::invalid_argument when a trajectory did not start in level n.
void transition_decomposition(int n, std::span<const TrajectoryTransitions> trajectories,
                              TransitionDecomposition& out);

/// Atoms of a discrete distribution over energies.
struct DiscreteDistribution {
  std::vector<double> support;
  std::vector<double> probabilities;
};

/// Merge tolerance for coincident energy differences.
inline constexpr double kAtomMergeTolerance = 1e-9;

/// p(u) = sum_{m,n} P_tau[m][n] P0_n delta(u - (E_tau_m - E0_n)), support sorted.
/// Throws std::invalid_argument when p_tau is not column-stochastic.
DiscreteDistribution tpm_distribution(const std::array<double, 2>& p0_populations,
                                      const Matrix2& p_tau, const SpectralDecomposition& basis_0,
                                      const SpectralDecomposition& basis_tau);

struct JarzynskiEstimate {
  double delta_f = 0.0;
  double standard_error = 0.0;
};

/// -(1/beta) ln sum_i p_i exp(-beta W_i). The distribution carries no
/// sampling error, so standard_error is zero.
JarzynskiEstimate jarzynski_estimate(const DiscreteDistribution& dist, double beta);

/// Jarzynski estimate built from averaged transition probabilities, with the
/// standard error propagated from se_p_tau (columns are independent
/// ensembles, rows within a column are complementary).
JarzynskiEstimate jarzynski_estimate(const std::array<double, 2>& p0_populations,
                                     const TransitionDecomposition& td,
                                     const SpectralDecomposition& basis_0,
                                     const SpectralDecomposition& basis_tau, double beta);

}  // namespace qtraj
