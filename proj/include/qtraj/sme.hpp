#pragma once

// Conditional (Bayesian) evolution of a continuously monitored qubit.
//
// Over a step [t_k, t_{k+1}] the detector part of the stochastic master
// equation is applied first, evaluated at the state at t_k, and the result is
// then propagated exactly under the Hamiltonian held at its end-of-step value
// H(t_{k+1}). With this ordering tr{H(t_{k+1}) d_rho_w} vanishes identically,
// which is what makes the per-step first law exact.

#include <array>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "qtraj/noise.hpp"
#include "qtraj/qubit.hpp"
#include "qtraj/step.hpp"
#include "qtraj/thermo.hpp"

namespace qtraj {

enum class Scheme {
  ito_euler,          // Euler-Maruyama on the Ito equations
  stratonovich_heun,  // Heun predictor-corrector on the Stratonovich form
};

std::string_view to_string(Scheme s);
/// Accepts "ito", "ito-euler", "stratonovich", "stratonovich-heun".
Scheme parse_scheme(std::string_view name);

/// Phenomenological detector: signal contrast delta_i = I2 - I1, symmetric
/// shot-noise spectral density s0 and baseline current i0.
struct DetectorModel {
  double delta_i = 0.0;
  double s0 = 0.0;
  double i0 = 0.0;

  /// 2 s0 / delta_i^2.
  double tau_m() const { return 2.0 * s0 / (delta_i * delta_i); }
  /// Ensemble dephasing rate delta_i^2 / (4 s0).
  double dephasing_rate() const { return delta_i == 0.0 ? 0.0 : delta_i * delta_i / (4.0 * s0); }
  bool measures() const { return delta_i != 0.0; }
  void validate() const;
};

class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, std::size_t step, double violation)
      : std::runtime_error(what), step_(step), violation_(violation) {}

  std::size_t step() const { return step_; }
  double violation() const { return violation_; }

 private:
  std::size_t step_;
  double violation_;
};

/// Coordinates (rho11, Re rho12, Im rho12) of the detector part
///   dx = a(x) dt + b(x) xi dt,   <xi(t) xi(t')> = (S0/2) delta(t - t').
using SdeVector = std::array<double, 3>;

SdeVector ito_drift(const DensityMatrix& rho, const DetectorModel& det);
SdeVector noise_coefficients(const DensityMatrix& rho, const DetectorModel& det);

/// a - (1/2)(S0/2) (db/dx) b, with the Jacobian of b taken by forward-mode
/// differentiation of noise_coefficients.
SdeVector stratonovich_drift(const DensityMatrix& rho, const DetectorModel& det);

/// Exact increment U rho U^dagger - rho for U = exp(-i h dt / hbar). To first
/// order in dt this is -(i/hbar)[h, rho] dt.
StateDelta unitary_increment(const DensityMatrix& rho, const QubitOperator& h, double dt,
                             double hbar = 1.0);

/// Euler-Maruyama increment of the detector terms: (a + b xi) dt.
StateDelta measurement_increment(const DensityMatrix& rho, double xi, double dt,
                                 const DetectorModel& det);

/// I0 + (delta_i/2)(2 rho11 - 1) + xi.
double detector_current(const DensityMatrix& rho, double xi, const DetectorModel& det);

/// Violations up to this size are treated as rounding and projected silently.
inline constexpr double kRoundoffTolerance = 1e-12;

/// Largest departure from the physical set a scheme may produce in one step
/// before the step is reported as a blow-up. Heun works in log-odds
/// coordinates and stays physical up to rounding; Euler-Maruyama on the
/// Ito equations leaves the Bloch ball by O(delta_i^2 dt / S0) per step.
double clamp_tolerance(Scheme scheme, const DetectorModel& det, double dt);

struct StepOutcome {
  DensityMatrix state;
  StepDecomposition decomposition;
  double violation = 0.0;  // before projection
  bool clamped = false;    // projected by more than rounding
};

/// One step from rho under the held Hamiltonian h_held. Throws
/// IntegrationError when the state leaves the physical set by more than
/// clamp_tolerance.
StepOutcome step(const DensityMatrix& rho, const QubitOperator& h_held, const DetectorModel& det,
                 double xi, double dt, Scheme scheme, double hbar = 1.0,
                 std::size_t step_index = 0);

/// Same, with the Hamiltonian taken from the protocol at t_end, the end of
/// the step interval.
StepOutcome step(const DensityMatrix& rho, double t_end, const DriveProtocol& protocol,
                 const DetectorModel& det, double xi, double dt, Scheme scheme,
                 std::size_t step_index = 0);

/// Feedback hook: returns the drive gain for step k given the state at t_k.
using GainHook =
    std::function<double(std::size_t step, const DensityMatrix& state, double nominal_gain)>;

struct TrajectoryOptions {
  GainHook controller;
  /// States are stored at every record_stride-th grid point (must divide steps).
  std::size_t record_stride = 1;
  /// Keep per-step currents, decompositions, energetics and gains.
  bool keep_increments = true;
};

struct TrajectoryRecord {
  std::size_t steps = 0;
  double dt = 0.0;
  std::vector<double> times;           // recorded grid points
  std::vector<DensityMatrix> states;   // recorded grid points
  std::vector<double> currents;        // per step
  std::vector<StepDecomposition> decompositions;
  std::vector<StepEnergetics> energetics;
  std::vector<double> gains;
  ThermoLedger ledger;
  TrajectoryTransitions transitions;
  std::size_t clamp_events = 0;
  double max_violation = 0.0;
  /// max_k | |r_k|^2 - |r_0|^2 | over the Bloch vector.
  double purity_drift = 0.0;
  DensityMatrix final_state;
};

/// Integrates one realization on the grid t_k = tau k / steps. Work and heat
/// are booked against the held Hamiltonians; transition contributions use
/// the eigenbasis of the held Hamiltonian at interior grid points and of the
/// nominal H_0 and H_tau at the ends.
TrajectoryRecord integrate_trajectory(const DensityMatrix& init, const DriveProtocol& protocol,
                                      const DetectorModel& det, const NoiseProcess& noise,
                                      Scheme scheme, std::size_t steps,
                                      const TrajectoryOptions& options = {});

}  // namespace qtraj
