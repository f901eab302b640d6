#pragma once

// Gain feedback g -> (1 - f dphi) g that steers the monitored state back onto
// the backaction-free (unitary) path.

#include <cstddef>
#include <memory>
#include <vector>

#include "qtraj/qubit.hpp"
#include "qtraj/sme.hpp"

namespace qtraj {

struct FeedbackParams {
  double f = 0.0;
  bool enabled = false;

  void validate() const;
};

/// Desired states on the integration grid, index k at t_k.
struct ReferenceTrajectory {
  std::vector<DensityMatrix> states;
};

/// The same grid and propagator as integrate_trajectory, with no detector.
ReferenceTrajectory reference_trajectory(const DensityMatrix& init, const DriveProtocol& protocol,
                                         std::size_t steps);

/// Angle between the y-z Bloch projections of `actual` and `desired`,
/// atan2(y_a, z_a) - atan2(y_d, z_d) wrapped to (-pi, pi]. Zero when either
/// projection is shorter than 1e-12.
double phase_error(const DensityMatrix& actual, const DensityMatrix& desired);

/// (1 - f dphi) g, unclipped.
double controlled_gain(double g, const FeedbackParams& fp, double dphi);

/// Controller for integrate_trajectory. Returns an empty hook when feedback
/// is disabled. The reference is shared read-only between trajectories.
GainHook make_gain_hook(const FeedbackParams& fp, std::shared_ptr<const ReferenceTrajectory> ref);

}  // namespace qtraj
