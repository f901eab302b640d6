#include "qtraj/thermo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace qtraj {

double step_work(const DensityMatrix& rho_prev, const QubitOperator& h_prev,
                 const QubitOperator& h_now) {
  const QubitOperator dh = h_now - h_prev;
  return expectation(rho_prev, dh);
}

double step_heat(const StateDelta& d_rho_q, const QubitOperator& h_now) {
  return expectation(d_rho_q, h_now);
}

ThermoLedger ThermoLedger::start(const DensityMatrix& rho0, const QubitOperator& h0) {
  ThermoLedger l;
  l.u0 = l.u_now = expectation(rho0, h0);
  return l;
}

StepEnergetics ledger_update(ThermoLedger& ledger, const DensityMatrix& rho_prev,
                             const DensityMatrix& rho_now, const QubitOperator& h_prev,
                             const QubitOperator& h_now, const StepDecomposition& step) {
  StepEnergetics e;
  e.work = step_work(rho_prev, h_prev, h_now);
  e.heat = step_heat(step.d_rho_q, h_now);
  const double u_new = expectation(rho_now, h_now);
  e.d_u = u_new - ledger.u_now;
  e.residual = std::abs(e.d_u - e.work - e.heat);
  if (e.residual > kFirstLawTolerance) {
    std::ostringstream msg;
    msg << "first-law residual " << e.residual << " at ledger step " << ledger.steps
        << " exceeds " << kFirstLawTolerance;
    throw std::logic_error(msg.str());
  }
  ledger.w_cum += e.work;
  ledger.q_cum += e.heat;
  ledger.u_now = u_new;
  ledger.max_residual = std::max(ledger.max_residual, e.residual);
  ++ledger.steps;
  return e;
}

double TrajectoryTransitions::identity_error() const {
  double err = 0.0;
  for (int m = 0; m < 2; ++m) {
    err = std::max(err, std::abs(p_tau[m] - p_initial[m] - dp_w[m] - dp_q[m]));
  }
  return err;
}

TransitionTracker::TransitionTracker(const SpectralDecomposition& basis0, const DensityMatrix& rho0)
    : basis_prev_(basis0) {
  for (int m = 0; m < 2; ++m) acc_.p_initial[m] = expectation(rho0, basis0.projector(m));
  for (int n = 0; n < 2; ++n) {
    const DensityMatrix level = as_density(basis0.projector(n));
    if (std::abs(level.rho11 - rho0.rho11) <= 1e-12 && std::abs(level.rho12 - rho0.rho12) <= 1e-12) {
      acc_.initial_level = n;
    }
  }
}

void TransitionTracker::update(const DensityMatrix& rho_prev, const SpectralDecomposition& basis_now,
                               const StepDecomposition& step) {
  for (int m = 0; m < 2; ++m) {
    const QubitOperator& proj = basis_now.projector(m);
    acc_.dp_w[m] += expectation(rho_prev, proj - basis_prev_.projector(m)) +
                    expectation(step.d_rho_w, proj);
    acc_.dp_q[m] += expectation(step.d_rho_q, proj);
  }
  basis_prev_ = basis_now;
}

const TrajectoryTransitions& TransitionTracker::finish(const DensityMatrix& rho_final) {
  for (int m = 0; m < 2; ++m) acc_.p_tau[m] = expectation(rho_final, basis_prev_.projector(m));
  return acc_;
}

namespace {

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

template <class F>
MeanSe mean_se(std::span<const TrajectoryTransitions> ts, F value) {
  const double n = static_cast<double>(ts.size());
  double sum = 0.0;
  for (const auto& t : ts) sum += value(t);
  MeanSe r;
  r.mean = sum / n;
  if (ts.size() > 1) {
    double ss = 0.0;
    for (const auto& t : ts) {
      const double d = value(t) - r.mean;
      ss += d * d;
    }
    r.se = std::sqrt(ss / (n - 1.0) / n);
  }
  return r;
}

}  // namespace

void transition_decomposition(int n, std::span<const TrajectoryTransitions> trajectories,
                              TransitionDecomposition& out) {
  if (n != 0 && n != 1) throw std::invalid_argument("transition_decomposition: level must be 0 or 1");
  if (trajectories.empty()) throw std::invalid_argument("transition_decomposition: empty ensemble");
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    if (trajectories[i].initial_level != n) {
      throw std::invalid_argument("transition_decomposition: trajectory " + std::to_string(i) +
                                  " did not start in level " + std::to_string(n) + " of H_0");
    }
    out.max_trajectory_identity_error =
        std::max(out.max_trajectory_identity_error, trajectories[i].identity_error());
  }
  for (int m = 0; m < 2; ++m) {
    const auto p = mean_se(trajectories, [m](const TrajectoryTransitions& t) { return t.p_tau[m]; });
    const auto w = mean_se(trajectories, [m](const TrajectoryTransitions& t) { return t.dp_w[m]; });
    const auto q = mean_se(trajectories, [m](const TrajectoryTransitions& t) { return t.dp_q[m]; });
    out.p_tau[m][n] = p.mean;
    out.se_p_tau[m][n] = p.se;
    out.dp_w[m][n] = w.mean;
    out.se_dp_w[m][n] = w.se;
    out.dp_q[m][n] = q.mean;
    out.se_dp_q[m][n] = q.se;
  }
  out.n_traj[n] = trajectories.size();
}

void TransitionDecomposition::check_invariants(double tol) const {
  auto fail = [](const std::string& what, int m, int n, double v) {
    std::ostringstream msg;
    msg << "transition decomposition invariant violated: " << what << " (m=" << m << ", n=" << n
        << ", value=" << v << ")";
    throw std::logic_error(msg.str());
  };
  for (int n = 0; n < 2; ++n) {
    const double col = p_tau[0][n] + p_tau[1][n];
    if (std::abs(col - 1.0) > tol) fail("column of p_tau must sum to 1", -1, n, col);
    const double cw = dp_w[0][n] + dp_w[1][n];
    if (std::abs(cw) > tol) fail("column of dp_w must sum to 0", -1, n, cw);
    const double cq = dp_q[0][n] + dp_q[1][n];
    if (std::abs(cq) > tol) fail("column of dp_q must sum to 0", -1, n, cq);
    for (int m = 0; m < 2; ++m) {
      const double gap = p_tau[m][n] - p0[m][n] - dp_w[m][n] - dp_q[m][n];
      if (std::abs(gap) > tol) fail("p_tau - p0 = dp_w + dp_q", m, n, gap);
      if (p_tau[m][n] < -tol || p_tau[m][n] > 1.0 + tol) fail("p_tau outside [0,1]", m, n, p_tau[m][n]);
    }
  }
}

DiscreteDistribution tpm_distribution(const std::array<double, 2>& p0_populations,
                                      const Matrix2& p_tau, const SpectralDecomposition& basis_0,
                                      const SpectralDecomposition& basis_tau) {
  for (int n = 0; n < 2; ++n) {
    const double col = p_tau[0][n] + p_tau[1][n];
    if (std::abs(col - 1.0) > 1e-10 || p_tau[0][n] < -1e-10 || p_tau[1][n] < -1e-10) {
      throw std::invalid_argument("tpm_distribution: transition matrix is not column-stochastic");
    }
  }
  std::vector<std::pair<double, double>> atoms;
  for (int m = 0; m < 2; ++m) {
    for (int n = 0; n < 2; ++n) {
      atoms.emplace_back(basis_tau.energy(m) - basis_0.energy(n), p_tau[m][n] * p0_populations[n]);
    }
  }
  std::sort(atoms.begin(), atoms.end());
  DiscreteDistribution dist;
  for (const auto& [u, w] : atoms) {
    if (!dist.support.empty() && std::abs(u - dist.support.back()) <= kAtomMergeTolerance) {
      dist.probabilities.back() += w;
    } else {
      dist.support.push_back(u);
      dist.probabilities.push_back(w);
    }
  }
  return dist;
}

JarzynskiEstimate jarzynski_estimate(const DiscreteDistribution& dist, double beta) {
  if (!(beta > 0.0)) throw std::domain_error("jarzynski_estimate: beta must be positive");
  double sum = 0.0;
  for (std::size_t i = 0; i < dist.support.size(); ++i) {
    sum += dist.probabilities[i] * std::exp(-beta * dist.support[i]);
  }
  if (!(sum > 0.0)) throw std::runtime_error("jarzynski_estimate: nonpositive exponential average");
  return {-std::log(sum) / beta, 0.0};
}

JarzynskiEstimate jarzynski_estimate(const std::array<double, 2>& p0_populations,
                                     const TransitionDecomposition& td,
                                     const SpectralDecomposition& basis_0,
                                     const SpectralDecomposition& basis_tau, double beta) {
  auto est = jarzynski_estimate(tpm_distribution(p0_populations, td.p_tau, basis_0, basis_tau), beta);
  const double sum = std::exp(-beta * est.delta_f);
  double var = 0.0;
  for (int n = 0; n < 2; ++n) {
    const double a0 = std::exp(-beta * (basis_tau.energy(0) - basis_0.energy(n)));
    const double a1 = std::exp(-beta * (basis_tau.energy(1) - basis_0.energy(n)));
    const double slope = p0_populations[n] * (a0 - a1);
    var += slope * slope * td.se_p_tau[0][n] * td.se_p_tau[0][n];
  }
  est.standard_error = std::sqrt(var) / (beta * sum);
  return est;
}

}  // namespace qtraj
