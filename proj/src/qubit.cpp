#include "qtraj/qubit.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace qtraj {

double physicality_violation(const DensityMatrix& rho) {
  const double p = rho.rho11;
  const double positivity = std::norm(rho.rho12) - p * (1.0 - p);
  return std::max({0.0, p - 1.0, -p, positivity});
}

void DriveProtocol::validate() const {
  if (!(tau > 0.0)) throw std::invalid_argument("drive protocol: tau must be positive");
  if (!(g >= 0.0)) throw std::invalid_argument("drive protocol: g must be nonnegative");
  if (!(nu >= 0.0)) throw std::invalid_argument("drive protocol: nu must be nonnegative");
  if (!(hbar > 0.0)) throw std::invalid_argument("drive protocol: hbar must be positive");
  if (!std::isfinite(epsilon)) throw std::invalid_argument("drive protocol: epsilon must be finite");
}

double drive_amplitude(double t, const DriveProtocol& p, double gain) {
  if (!(t >= 0.0 && t <= p.tau)) {
    throw std::domain_error("drive_amplitude: t = " + std::to_string(t) + " outside [0, " +
                            std::to_string(p.tau) + "]");
  }
  return gain / std::cosh(p.nu * (1.0 - t / p.tau));
}

double drive_amplitude(double t, const DriveProtocol& p) { return drive_amplitude(t, p, p.g); }

QubitOperator hamiltonian_at(double t, const DriveProtocol& p, double gain) {
  return {0.0, drive_amplitude(t, p, gain), 0.0, p.epsilon};
}

QubitOperator hamiltonian_at(double t, const DriveProtocol& p) { return hamiltonian_at(t, p, p.g); }

SpectralDecomposition eigendecompose(const QubitOperator& h) {
  if (h.c0 != 0.0) throw std::invalid_argument("eigendecompose: operator must be traceless");
  SpectralDecomposition s;
  const double e = std::hypot(h.cx, h.cy, h.cz);
  if (e == 0.0) {
    s.degenerate = true;
    s.proj_minus = 0.5 * (kIdentity + kSigmaZ);
    s.proj_plus = 0.5 * (kIdentity - kSigmaZ);
    return s;
  }
  const QubitOperator n{0.0, h.cx / e, h.cy / e, h.cz / e};
  s.e_minus = -e;
  s.e_plus = e;
  s.proj_minus = 0.5 * (kIdentity - n);
  s.proj_plus = 0.5 * (kIdentity + n);
  return s;
}

DensityMatrix as_density(const QubitOperator& projector) {
  return {projector.c0 + projector.cz, projector.a12()};
}

std::array<double, 2> thermal_populations(const ThermalSpec& spec, const QubitOperator& h) {
  if (!(spec.beta >= 0.0)) throw std::domain_error("thermal state: beta must be nonnegative");
  const double e = std::hypot(h.cx, h.cy, h.cz);
  if (e == 0.0 || spec.beta == 0.0) return {0.5, 0.5};
  const double x = 2.0 * spec.beta * e;
  return {1.0 / (1.0 + std::exp(-x)), 1.0 / (1.0 + std::exp(x))};
}

DensityMatrix thermal_state(const ThermalSpec& spec, const QubitOperator& h) {
  const auto pops = thermal_populations(spec, h);
  const auto basis = eigendecompose(QubitOperator{0.0, h.cx, h.cy, h.cz});
  const QubitOperator rho = pops[0] * basis.proj_minus + pops[1] * basis.proj_plus;
  return {rho.c0 + rho.cz, rho.a12()};
}

double expectation(const DensityMatrix& rho, const QubitOperator& a) {
  return a.c0 + a.cz * (2.0 * rho.rho11 - 1.0) + 2.0 * a.cx * rho.rho12.real() -
         2.0 * a.cy * rho.rho12.imag();
}

double expectation(const StateDelta& delta, const QubitOperator& a) {
  return 2.0 * a.cz * delta.d11 + 2.0 * a.cx * delta.d12.real() - 2.0 * a.cy * delta.d12.imag();
}

BlochVector bloch_coordinates(const DensityMatrix& rho) {
  return {2.0 * rho.rho12.real(), 2.0 * rho.rho12.imag(), 2.0 * rho.rho11 - 1.0};
}

DensityMatrix from_bloch(const BlochVector& r) {
  return {0.5 * (r.z + 1.0), complex{0.5 * r.x, 0.5 * r.y}};
}

namespace {

// ln Z - beta E for Z = 2 cosh(beta E), E >= 0.
double log_partition_excess(double beta, double e) {
  if (std::isinf(beta)) return 0.0;
  return std::log1p(std::exp(-2.0 * beta * e));
}

}  // namespace

double free_energy_difference(const ThermalSpec& spec, const QubitOperator& h0,
                              const QubitOperator& htau) {
  if (!(spec.beta > 0.0)) throw std::domain_error("free_energy_difference: beta must be positive");
  const double e0 = std::hypot(h0.cx, h0.cy, h0.cz);
  const double et = std::hypot(htau.cx, htau.cy, htau.cz);
  const double excess = log_partition_excess(spec.beta, et) - log_partition_excess(spec.beta, e0);
  if (std::isinf(spec.beta)) return e0 - et;
  return -(et - e0) - excess / spec.beta;
}

double von_neumann_entropy(const DensityMatrix& rho) {
  const double z = 2.0 * rho.rho11 - 1.0;
  const double r = std::min(1.0, std::sqrt(z * z + 4.0 * std::norm(rho.rho12)));
  double s = 0.0;
  for (const double p : {0.5 * (1.0 + r), 0.5 * (1.0 - r)}) {
    if (p > 0.0) s -= p * std::log(p);
  }
  return s;
}

}  // namespace qtraj
