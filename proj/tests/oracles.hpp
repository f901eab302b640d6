#pragma once

// Reference computations that share no code with the library: wavefunction
// propagation with classical RK4, eigenvectors from the 2x2 characteristic
// equation, and the Jarzynski sum written out term by term.

#include <array>
#include <cmath>
#include <complex>

namespace oracle {

using cplx = std::complex<double>;
using Spinor = std::array<cplx, 2>;

struct Drive {
  double g, nu, tau, eps;
};

inline double lambda(const Drive& d, double t) { return d.g / std::cosh(d.nu * (1.0 - t / d.tau)); }

// i dpsi/dt = H psi with H = eps sz + lam sx
inline Spinor rhs(const Spinor& p, double eps, double lam) {
  const cplx mi{0.0, -1.0};
  return {mi * (eps * p[0] + lam * p[1]), mi * (lam * p[0] - eps * p[1])};
}

inline Spinor axpy(const Spinor& p, double h, const Spinor& k) { return {p[0] + h * k[0], p[1] + h * k[1]}; }

// Lower (n = 0) or upper (n = 1) eigenvector of eps sz + lam sx.
inline Spinor eigenvector(double eps, double lam, int n) {
  const double e = std::sqrt(eps * eps + lam * lam) * (n == 0 ? -1.0 : 1.0);
  // (eps - e) a + lam b = 0
  Spinor v = std::abs(lam) > 0.0 ? Spinor{lam, e - eps} : (n == 0 ? Spinor{0.0, 1.0} : Spinor{1.0, 0.0});
  if (std::abs(lam) == 0.0 && eps < 0.0) v = n == 0 ? Spinor{1.0, 0.0} : Spinor{0.0, 1.0};
  const double norm = std::sqrt(std::norm(v[0]) + std::norm(v[1]));
  return {v[0] / norm, v[1] / norm};
}

inline double overlap2(const Spinor& a, const Spinor& b) {
  return std::norm(std::conj(a[0]) * b[0] + std::conj(a[1]) * b[1]);
}

// Hamiltonian held at its value at the end of each grid interval, RK4 with
// `sub` substeps per interval.
inline Spinor propagate_held(Spinor p, const Drive& d, int steps, int sub) {
  const double h = d.tau / steps / sub;
  for (int k = 0; k < steps; ++k) {
    const double lam = lambda(d, d.tau * (static_cast<double>(k + 1) / steps));
    for (int s = 0; s < sub; ++s) {
      const Spinor k1 = rhs(p, d.eps, lam);
      const Spinor k2 = rhs(axpy(p, 0.5 * h, k1), d.eps, lam);
      const Spinor k3 = rhs(axpy(p, 0.5 * h, k2), d.eps, lam);
      const Spinor k4 = rhs(axpy(p, h, k3), d.eps, lam);
      p = {p[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
           p[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])};
    }
  }
  return p;
}

// Same drive evaluated continuously in time (no holding).
inline Spinor propagate_continuous(Spinor p, const Drive& d, int n) {
  const double h = d.tau / n;
  for (int k = 0; k < n; ++k) {
    const double t = h * k;
    const Spinor k1 = rhs(p, d.eps, lambda(d, t));
    const Spinor k2 = rhs(axpy(p, 0.5 * h, k1), d.eps, lambda(d, t + 0.5 * h));
    const Spinor k3 = rhs(axpy(p, 0.5 * h, k2), d.eps, lambda(d, t + 0.5 * h));
    const Spinor k4 = rhs(axpy(p, h, k3), d.eps, lambda(d, std::min(t + h, d.tau)));
    p = {p[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
         p[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])};
  }
  return p;
}

// P[m][n] = |<m_tau| U |n_0>|^2 under the held-Hamiltonian propagation.
inline std::array<std::array<double, 2>, 2> transition_matrix(const Drive& d, int steps, int sub) {
  std::array<std::array<double, 2>, 2> P{};
  for (int n = 0; n < 2; ++n) {
    const Spinor out = propagate_held(eigenvector(d.eps, lambda(d, 0.0), n), d, steps, sub);
    for (int m = 0; m < 2; ++m) P[m][n] = overlap2(eigenvector(d.eps, lambda(d, d.tau), m), out);
  }
  return P;
}

inline double closed_form_delta_f(double beta, double e0, double et) {
  return -(std::log(2.0 * std::cosh(beta * et)) - std::log(2.0 * std::cosh(beta * e0))) / beta;
}

// -(1/beta) ln sum_{m,n} P[m][n] p0_n exp(-beta (Et_m - E0_n)), four terms.
inline double brute_force_jarzynski(double beta, double e0, double et, const std::array<std::array<double, 2>, 2>& P) {
  const double z0 = std::exp(beta * e0) + std::exp(-beta * e0);
  const double p0[2] = {std::exp(beta * e0) / z0, std::exp(-beta * e0) / z0};
  const double E0[2] = {-e0, e0};
  const double Et[2] = {-et, et};
  double s = 0.0;
  s += P[0][0] * p0[0] * std::exp(-beta * (Et[0] - E0[0]));
  s += P[0][1] * p0[1] * std::exp(-beta * (Et[0] - E0[1]));
  s += P[1][0] * p0[0] * std::exp(-beta * (Et[1] - E0[0]));
  s += P[1][1] * p0[1] * std::exp(-beta * (Et[1] - E0[1]));
  return -std::log(s) / beta;
}

}  // namespace oracle
