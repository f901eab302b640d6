#pragma once

// Two-level substrate: Pauli-coefficient operators, conditional density
// matrices, spectra, Gibbs states and closed-form free energies.

#include <array>
#include <complex>

namespace qtraj {

using complex = std::complex<double>;

/// Trace-free change of a density matrix. rho22 changes by -d11.
struct StateDelta {
  double d11 = 0.0;
  complex d12{0.0, 0.0};

  StateDelta& operator+=(const StateDelta& o) {
    d11 += o.d11;
    d12 += o.d12;
    return *this;
  }
  friend StateDelta operator+(StateDelta a, const StateDelta& b) { return a += b; }
  friend StateDelta operator-(const StateDelta& a, const StateDelta& b) {
    return {a.d11 - b.d11, a.d12 - b.d12};
  }
  friend StateDelta operator*(double s, const StateDelta& a) { return {s * a.d11, s * a.d12}; }
};

/// Qubit density matrix stored as rho11 and rho12; rho22 = 1 - rho11 and
/// rho21 = conj(rho12) are implied, so the trace is exactly one.
struct DensityMatrix {
  double rho11 = 1.0;
  complex rho12{0.0, 0.0};

  double rho22() const { return 1.0 - rho11; }
  complex rho21() const { return std::conj(rho12); }

  friend DensityMatrix operator+(const DensityMatrix& r, const StateDelta& d) {
    return {r.rho11 + d.d11, r.rho12 + d.d12};
  }
  friend StateDelta operator-(const DensityMatrix& a, const DensityMatrix& b) {
    return {a.rho11 - b.rho11, a.rho12 - b.rho12};
  }
  bool operator==(const DensityMatrix&) const = default;
};

/// Amount by which rho leaves the physical set: the largest of
/// rho11 - 1, -rho11 and |rho12|^2 - rho11*rho22 (zero when physical).
double physicality_violation(const DensityMatrix& rho);

/// A = c0 I + cx sx + cy sy + cz sz with real coefficients (Hermitian).
struct QubitOperator {
  double c0 = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  double cz = 0.0;

  complex a11() const { return {c0 + cz, 0.0}; }
  complex a22() const { return {c0 - cz, 0.0}; }
  complex a12() const { return {cx, -cy}; }
  complex a21() const { return {cx, cy}; }

  QubitOperator& operator+=(const QubitOperator& o) {
    c0 += o.c0;
    cx += o.cx;
    cy += o.cy;
    cz += o.cz;
    return *this;
  }
  friend QubitOperator operator+(QubitOperator a, const QubitOperator& b) { return a += b; }
  friend QubitOperator operator-(const QubitOperator& a, const QubitOperator& b) {
    return {a.c0 - b.c0, a.cx - b.cx, a.cy - b.cy, a.cz - b.cz};
  }
  friend QubitOperator operator*(double s, const QubitOperator& a) {
    return {s * a.c0, s * a.cx, s * a.cy, s * a.cz};
  }
  bool operator==(const QubitOperator&) const = default;
};

inline constexpr QubitOperator kIdentity{1.0, 0.0, 0.0, 0.0};
inline constexpr QubitOperator kSigmaX{0.0, 1.0, 0.0, 0.0};
inline constexpr QubitOperator kSigmaY{0.0, 0.0, 1.0, 0.0};
inline constexpr QubitOperator kSigmaZ{0.0, 0.0, 0.0, 1.0};

/// Drive lambda(t) = g / cosh(nu (1 - t/tau)) on top of a static splitting
/// epsilon. Simulation units have hbar = 1.
struct DriveProtocol {
  double g = 0.0;
  double nu = 0.0;
  double tau = 1.0;
  double epsilon = 0.0;
  double hbar = 1.0;

  void validate() const;
};

/// Throws std::domain_error when t lies outside [0, tau].
double drive_amplitude(double t, const DriveProtocol& p);

/// Same as drive_amplitude but with the peak amplitude replaced by `gain`
/// (used when feedback modulates g).
double drive_amplitude(double t, const DriveProtocol& p, double gain);

/// H_t = epsilon sz + lambda_t sx.
QubitOperator hamiltonian_at(double t, const DriveProtocol& p);
QubitOperator hamiltonian_at(double t, const DriveProtocol& p, double gain);

struct SpectralDecomposition {
  double e_minus = 0.0;
  double e_plus = 0.0;
  QubitOperator proj_minus;
  QubitOperator proj_plus;
  bool degenerate = false;

  /// Projector of level n: 0 is the lower level, 1 the upper.
  const QubitOperator& projector(int n) const { return n == 0 ? proj_minus : proj_plus; }
  double energy(int n) const { return n == 0 ? e_minus : e_plus; }
};

/// Spectrum of a traceless Hermitian operator. The all-zero operator is
/// reported as degenerate with computational-basis projectors
/// (proj_minus = |1><1|, proj_plus = |2><2|). Throws std::invalid_argument
/// when c0 != 0.
SpectralDecomposition eigendecompose(const QubitOperator& h);

/// Pure state equal to a rank-1 projector.
DensityMatrix as_density(const QubitOperator& projector);

/// Inverse temperature; beta = +infinity selects the ground state.
struct ThermalSpec {
  double beta = 1.0;
};

DensityMatrix thermal_state(const ThermalSpec& spec, const QubitOperator& h);

/// Boltzmann populations (lower, upper) of a traceless Hamiltonian.
std::array<double, 2> thermal_populations(const ThermalSpec& spec, const QubitOperator& h);

/// tr{rho A}.
double expectation(const DensityMatrix& rho, const QubitOperator& a);

/// tr{A delta}; the identity part of A drops out.
double expectation(const StateDelta& delta, const QubitOperator& a);

struct BlochVector {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double norm2() const { return x * x + y * y + z * z; }
};

/// (2 Re rho12, 2 Im rho12, 2 rho11 - 1).
BlochVector bloch_coordinates(const DensityMatrix& rho);
DensityMatrix from_bloch(const BlochVector& r);

/// -(1/beta) ln(Z_tau / Z_0) for traceless two-level Hamiltonians.
/// Throws std::domain_error unless beta > 0.
double free_energy_difference(const ThermalSpec& spec, const QubitOperator& h0,
                              const QubitOperator& htau);

/// -sum p ln p over the eigenvalues of rho (natural log, 0 ln 0 = 0).
double von_neumann_entropy(const DensityMatrix& rho);

}  // namespace qtraj
