#include "qtraj/sme.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qtraj {

std::string_view to_string(Scheme s) {
  switch (s) {
    case Scheme::ito_euler:
      return "ito-euler";
    case Scheme::stratonovich_heun:
      return "stratonovich-heun";
  }
  return "unknown";
}

Scheme parse_scheme(std::string_view name) {
  if (name == "ito" || name == "ito-euler") return Scheme::ito_euler;
  if (name == "stratonovich" || name == "stratonovich-heun") return Scheme::stratonovich_heun;
  throw std::invalid_argument("unknown scheme '" + std::string(name) +
                              "' (expected ito or stratonovich)");
}

void DetectorModel::validate() const {
  if (!std::isfinite(delta_i) || !std::isfinite(i0)) {
    throw std::invalid_argument("detector: delta_i and i0 must be finite");
  }
  if (!(s0 >= 0.0)) throw std::invalid_argument("detector: s0 must be nonnegative");
  if (delta_i != 0.0 && !(s0 > 0.0)) {
    throw std::invalid_argument("detector: s0 must be positive when delta_i != 0");
  }
}

namespace {

// Forward-mode dual number carrying derivatives with respect to the three
// coordinates (rho11, Re rho12, Im rho12).
struct Dual {
  double v = 0.0;
  std::array<double, 3> d{};

  Dual() = default;
  Dual(double value) : v(value) {}  // NOLINT: constants promote implicitly
  static Dual variable(double value, int i) {
    Dual x(value);
    x.d[i] = 1.0;
    return x;
  }
};

Dual operator-(const Dual& a, const Dual& b) {
  Dual r(a.v - b.v);
  for (int i = 0; i < 3; ++i) r.d[i] = a.d[i] - b.d[i];
  return r;
}
Dual operator*(const Dual& a, const Dual& b) {
  Dual r(a.v * b.v);
  for (int i = 0; i < 3; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
  return r;
}
Dual operator/(const Dual& a, const Dual& b) {
  Dual r(a.v / b.v);
  for (int i = 0; i < 3; ++i) r.d[i] = (a.d[i] * b.v - a.v * b.d[i]) / (b.v * b.v);
  return r;
}
Dual log(const Dual& a) {
  Dual r(std::log(a.v));
  for (int i = 0; i < 3; ++i) r.d[i] = a.d[i] / a.v;
  return r;
}
Dual sqrt(const Dual& a) {
  Dual r(std::sqrt(a.v));
  for (int i = 0; i < 3; ++i) r.d[i] = a.d[i] / (2.0 * r.v);
  return r;
}

template <class T>
std::array<T, 3> noise_field(const std::array<T, 3>& x, double gain) {
  const T one_minus_2p = T(1.0) - T(2.0) * x[0];
  return {T(2.0 * gain) * x[0] * (T(1.0) - x[0]), T(gain) * one_minus_2p * x[1],
          T(gain) * one_minus_2p * x[2]};
}

// Chart adapted to the measurement flow: log-odds L = ln(rho11/rho22) and
// normalized coherence C = rho12 / sqrt(rho11 rho22).
template <class T>
std::array<T, 3> to_chart(const std::array<T, 3>& x) {
  using std::log;
  using std::sqrt;
  const T p22 = T(1.0) - x[0];
  const T s = sqrt(x[0] * p22);
  return {log(x[0] / p22), x[1] / s, x[2] / s};
}

std::array<double, 3> from_chart(const std::array<double, 3>& y) {
  const double L = y[0];
  const double p = L >= 0.0 ? 1.0 / (1.0 + std::exp(-L)) : std::exp(L) / (1.0 + std::exp(L));
  const double s = 0.5 / std::cosh(0.5 * L);
  return {p, y[1] * s, y[2] * s};
}

std::array<double, 3> coords(const DensityMatrix& rho) {
  return {rho.rho11, rho.rho12.real(), rho.rho12.imag()};
}

DensityMatrix from_coords(const std::array<double, 3>& x) { return {x[0], complex{x[1], x[2]}}; }

double noise_gain(const DetectorModel& det) { return det.delta_i / det.s0; }

// Stratonovich vector field a_S + b xi expressed in the (L, C) chart.
std::array<double, 3> chart_field(const std::array<double, 3>& y, double xi,
                                  const DetectorModel& det) {
  const DensityMatrix rho = from_coords(from_chart(y));
  const SdeVector a = stratonovich_drift(rho, det);
  const SdeVector b = noise_coefficients(rho, det);
  std::array<Dual, 3> x;
  for (int i = 0; i < 3; ++i) x[i] = Dual::variable(coords(rho)[i], i);
  const auto chart = to_chart(x);
  std::array<double, 3> f{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) f[i] += chart[i].d[j] * (a[j] + b[j] * xi);
  }
  return f;
}

StateDelta heun_measurement_increment(const DensityMatrix& rho, double xi, double dt,
                                      const DetectorModel& det) {
  const auto y0 = to_chart(coords(rho));
  const auto f0 = chart_field(y0, xi, det);
  std::array<double, 3> y1;
  for (int i = 0; i < 3; ++i) y1[i] = y0[i] + f0[i] * dt;
  const auto f1 = chart_field(y1, xi, det);
  std::array<double, 3> y2;
  for (int i = 0; i < 3; ++i) y2[i] = y0[i] + 0.5 * (f0[i] + f1[i]) * dt;
  return from_coords(from_chart(y2)) - rho;
}

DensityMatrix project_physical(const DensityMatrix& rho) {
  DensityMatrix p = rho;
  p.rho11 = std::clamp(p.rho11, 0.0, 1.0);
  const double bound = p.rho11 * (1.0 - p.rho11);
  const double n2 = std::norm(p.rho12);
  if (n2 > bound) p.rho12 *= n2 > 0.0 ? std::sqrt(bound / n2) : 0.0;
  return p;
}

}  // namespace

SdeVector ito_drift(const DensityMatrix& rho, const DetectorModel& det) {
  const double gamma = det.dephasing_rate();
  return {0.0, -gamma * rho.rho12.real(), -gamma * rho.rho12.imag()};
}

SdeVector noise_coefficients(const DensityMatrix& rho, const DetectorModel& det) {
  if (!det.measures()) return {0.0, 0.0, 0.0};
  return noise_field(coords(rho), noise_gain(det));
}

SdeVector stratonovich_drift(const DensityMatrix& rho, const DetectorModel& det) {
  SdeVector a = ito_drift(rho, det);
  if (!det.measures()) return a;
  std::array<Dual, 3> x;
  const auto c = coords(rho);
  for (int i = 0; i < 3; ++i) x[i] = Dual::variable(c[i], i);
  const auto b = noise_field(x, noise_gain(det));
  const double sigma2 = 0.5 * det.s0;
  for (int i = 0; i < 3; ++i) {
    double jb = 0.0;
    for (int j = 0; j < 3; ++j) jb += b[i].d[j] * b[j].v;
    a[i] -= 0.5 * sigma2 * jb;
  }
  return a;
}

StateDelta unitary_increment(const DensityMatrix& rho, const QubitOperator& h, double dt,
                             double hbar) {
  const double e = std::hypot(h.cx, h.cy, h.cz);
  if (e == 0.0 || dt == 0.0) return {};
  const double theta = e * dt / hbar;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double nx = h.cx / e, ny = h.cy / e, nz = h.cz / e;
  // U = cos(theta) I - i sin(theta) n.sigma
  const complex u11{c, -s * nz};
  const complex u12{-s * ny, -s * nx};
  const complex u21{s * ny, -s * nx};
  const complex u22{c, s * nz};
  const double p11 = rho.rho11;
  const double p22 = rho.rho22();
  const complex p12 = rho.rho12;
  const complex p21 = rho.rho21();
  const double n11 = std::norm(u11) * p11 + std::norm(u12) * p22 +
                     2.0 * (u11 * p12 * std::conj(u12)).real();
  const complex n12 = u11 * p11 * std::conj(u21) + u11 * p12 * std::conj(u22) +
                      u12 * p21 * std::conj(u21) + u12 * p22 * std::conj(u22);
  return {n11 - p11, n12 - p12};
}

StateDelta measurement_increment(const DensityMatrix& rho, double xi, double dt,
                                 const DetectorModel& det) {
  if (!det.measures()) return {};
  const SdeVector a = ito_drift(rho, det);
  const SdeVector b = noise_coefficients(rho, det);
  return {(a[0] + b[0] * xi) * dt, complex{(a[1] + b[1] * xi) * dt, (a[2] + b[2] * xi) * dt}};
}

double detector_current(const DensityMatrix& rho, double xi, const DetectorModel& det) {
  return det.i0 + 0.5 * det.delta_i * (2.0 * rho.rho11 - 1.0) + xi;
}

double clamp_tolerance(Scheme scheme, const DetectorModel& det, double dt) {
  constexpr double kBase = 1e-9;
  if (scheme == Scheme::stratonovich_heun || !det.measures()) return kBase;
  // One Euler step overshoots the Bloch sphere by 2*gamma*dt*(z_k^2 - 1) for a
  // standard normal z_k; 50 covers draws far beyond any realistic sample.
  return kBase + 50.0 * 2.0 * det.dephasing_rate() * dt;
}

StepOutcome step(const DensityMatrix& rho, const QubitOperator& h_held, const DetectorModel& det,
                 double xi, double dt, Scheme scheme, double hbar, std::size_t step_index) {
  StepOutcome out;
  out.decomposition.xi = xi;

  StateDelta dq;
  const bool fixed_point = rho.rho11 <= 0.0 || rho.rho11 >= 1.0;
  if (det.measures() && !fixed_point) {
    dq = scheme == Scheme::ito_euler ? measurement_increment(rho, xi, dt, det)
                                     : heun_measurement_increment(rho, xi, dt, det);
    const DensityMatrix measured = rho + dq;
    out.violation = physicality_violation(measured);
    if (out.violation > clamp_tolerance(scheme, det, dt)) {
      std::ostringstream msg;
      msg << "integration blow-up at step " << step_index << ": state leaves the physical set by "
          << out.violation << " (" << to_string(scheme) << ")";
      throw IntegrationError(msg.str(), step_index, out.violation);
    }
    if (out.violation > 0.0) {
      dq = project_physical(measured) - rho;
      out.clamped = out.violation > kRoundoffTolerance;
    }
  }

  const DensityMatrix measured = rho + dq;
  const StateDelta dw = unitary_increment(measured, h_held, dt, hbar);
  out.decomposition.d_rho_q = dq;
  out.decomposition.d_rho_w = dw;
  out.state = rho + (dw + dq);
  return out;
}

StepOutcome step(const DensityMatrix& rho, double t_end, const DriveProtocol& protocol,
                 const DetectorModel& det, double xi, double dt, Scheme scheme,
                 std::size_t step_index) {
  return step(rho, hamiltonian_at(t_end, protocol), det, xi, dt, scheme, protocol.hbar, step_index);
}

TrajectoryRecord integrate_trajectory(const DensityMatrix& init, const DriveProtocol& protocol,
                                      const DetectorModel& det, const NoiseProcess& noise,
                                      Scheme scheme, std::size_t steps,
                                      const TrajectoryOptions& options) {
  protocol.validate();
  det.validate();
  if (steps == 0) throw std::invalid_argument("integrate_trajectory: steps must be positive");
  const std::size_t stride = options.record_stride;
  if (stride == 0 || steps % stride != 0) {
    throw std::invalid_argument("integrate_trajectory: record_stride must divide steps");
  }
  if (physicality_violation(init) > kRoundoffTolerance) {
    throw std::invalid_argument("integrate_trajectory: initial state is not a density matrix");
  }
  const double n_steps = static_cast<double>(steps);
  const double dt = protocol.tau / n_steps;
  const double expected_sigma = std::sqrt(det.s0 / (2.0 * dt));
  if (std::abs(noise.sigma_step - expected_sigma) > 1e-12 * std::max(1.0, expected_sigma)) {
    throw std::invalid_argument("integrate_trajectory: noise process built for a different dt or S0");
  }
  auto grid_time = [&](std::size_t k) { return protocol.tau * (static_cast<double>(k) / n_steps); };

  TrajectoryRecord rec;
  rec.steps = steps;
  rec.dt = dt;
  const std::size_t n_recorded = steps / stride + 1;
  rec.times.reserve(n_recorded);
  rec.states.reserve(n_recorded);
  if (options.keep_increments) {
    rec.currents.reserve(steps);
    rec.decompositions.reserve(steps);
    rec.energetics.reserve(steps);
    rec.gains.reserve(steps);
  }

  const QubitOperator h0 = hamiltonian_at(0.0, protocol);
  const SpectralDecomposition basis_tau = eigendecompose(hamiltonian_at(protocol.tau, protocol));
  DensityMatrix rho = init;
  QubitOperator h_prev = h0;
  rec.ledger = ThermoLedger::start(rho, h0);
  TransitionTracker tracker(eigendecompose(h0), rho);
  const double norm0 = bloch_coordinates(rho).norm2();
  rec.times.push_back(0.0);
  rec.states.push_back(rho);

  for (std::size_t k = 0; k < steps; ++k) {
    const double xi = sample_noise(noise, k);
    const double gain = options.controller ? options.controller(k, rho, protocol.g) : protocol.g;
    const QubitOperator h_now = hamiltonian_at(grid_time(k + 1), protocol, gain);
    StepOutcome out = step(rho, h_now, det, xi, dt, scheme, protocol.hbar, k);
    const StepEnergetics energy =
        ledger_update(rec.ledger, rho, out.state, h_prev, h_now, out.decomposition);
    tracker.update(rho, k + 1 == steps ? basis_tau : eigendecompose(h_now), out.decomposition);

    if (out.clamped) ++rec.clamp_events;
    rec.max_violation = std::max(rec.max_violation, out.violation);
    rec.purity_drift = std::max(rec.purity_drift, std::abs(bloch_coordinates(out.state).norm2() - norm0));
    if (options.keep_increments) {
      rec.currents.push_back(detector_current(rho, xi, det));
      rec.decompositions.push_back(out.decomposition);
      rec.energetics.push_back(energy);
      rec.gains.push_back(gain);
    }
    rho = out.state;
    h_prev = h_now;
    if ((k + 1) % stride == 0) {
      rec.times.push_back(grid_time(k + 1));
      rec.states.push_back(rho);
    }
  }
  rec.transitions = tracker.finish(rho);
  rec.final_state = rho;
  return rec;
}

}  // namespace qtraj
