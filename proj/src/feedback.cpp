#include "qtraj/feedback.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace qtraj {

void FeedbackParams::validate() const {
  if (!(f >= 0.0) || !std::isfinite(f)) throw std::invalid_argument("feedback: f must be finite and >= 0");
}

ReferenceTrajectory reference_trajectory(const DensityMatrix& init, const DriveProtocol& protocol,
                                         std::size_t steps) {
  const DetectorModel none{};
  const NoiseProcess silent{};
  TrajectoryOptions opts;
  opts.keep_increments = false;
  auto rec = integrate_trajectory(init, protocol, none, silent, Scheme::ito_euler, steps, opts);
  return {std::move(rec.states)};
}

double phase_error(const DensityMatrix& actual, const DensityMatrix& desired) {
  const BlochVector a = bloch_coordinates(actual);
  const BlochVector d = bloch_coordinates(desired);
  if (std::hypot(a.y, a.z) < 1e-12 || std::hypot(d.y, d.z) < 1e-12) return 0.0;
  double dphi = std::atan2(a.y, a.z) - std::atan2(d.y, d.z);
  // raw difference lies in (-2pi, 2pi]
  if (dphi > std::numbers::pi) dphi -= 2.0 * std::numbers::pi;
  else if (dphi <= -std::numbers::pi) dphi += 2.0 * std::numbers::pi;
  return dphi;
}

double controlled_gain(double g, const FeedbackParams& fp, double dphi) { return (1.0 - fp.f * dphi) * g; }

GainHook make_gain_hook(const FeedbackParams& fp, std::shared_ptr<const ReferenceTrajectory> ref) {
  if (!fp.enabled) return {};
  fp.validate();
  if (!ref) throw std::invalid_argument("make_gain_hook: feedback needs a reference trajectory");
  return [fp, ref = std::move(ref)](std::size_t k, const DensityMatrix& state, double nominal) {
    if (k >= ref->states.size()) {
      throw std::out_of_range("feedback reference has no state for step " + std::to_string(k));
    }
    return controlled_gain(nominal, fp, phase_error(state, ref->states[k]));
  };
}

}  // namespace qtraj
