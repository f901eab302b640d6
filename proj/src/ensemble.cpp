#include "qtraj/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

namespace qtraj {

void EnsembleConfig::validate() const {
  if (n_traj == 0) throw std::invalid_argument("ensemble: n_traj must be at least 1");
  if (steps == 0) throw std::invalid_argument("ensemble: steps must be at least 1");
  if (record_stride == 0 || steps % record_stride != 0) {
    throw std::invalid_argument("ensemble: record_stride must divide steps");
  }
  if (initial.kind == InitialState::Kind::eigenstate && initial.level != 0 && initial.level != 1) {
    throw std::invalid_argument("ensemble: eigenstate level must be 0 or 1");
  }
  if (initial.kind == InitialState::Kind::thermal && !(initial.beta >= 0.0)) {
    throw std::invalid_argument("ensemble: thermal beta must be >= 0");
  }
}

namespace {

// Runs body(i) for i in [0, n) on `workers` threads. The first exception (by
// index) is rethrown after all workers stop.
template <class Body>
void parallel_for(std::size_t n, unsigned workers, Body body) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex err_mu;
  std::size_t err_index = n;
  std::exception_ptr err;

  auto run = [&] {
    for (;;) {
      if (stop.load(std::memory_order_relaxed)) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(err_mu);
        if (i < err_index) {
          err_index = i;
          err = std::current_exception();
        }
        stop = true;
      }
    }
  };
  if (workers <= 1) {
    run();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run);
    for (auto& t : pool) t.join();
  }
  if (err) std::rethrow_exception(err);
}

struct Start {
  DensityMatrix state;
  int level = -1;
};

Start initial_for(const InitialState& init, const SpectralDecomposition& basis0,
                  const std::array<double, 2>& p0, std::uint64_t seed, std::uint64_t stream) {
  switch (init.kind) {
    case InitialState::Kind::thermal: {
      // lane 1 keeps the level draw apart from the detector noise
      const double u = counter_uniform(seed, stream, 0, 1);
      const int n = u < p0[0] ? 0 : 1;
      return {as_density(basis0.projector(n)), n};
    }
    case InitialState::Kind::eigenstate:
      return {as_density(basis0.projector(init.level)), init.level};
    case InitialState::Kind::explicit_state:
      return {init.state, -1};
  }
  return {};
}

}  // namespace

EnsembleResult run_ensemble(const EnsembleConfig& cfg, const DriveProtocol& protocol,
                            const DetectorModel& det, const FeedbackParams& fb) {
  cfg.validate();
  protocol.validate();
  det.validate();
  fb.validate();

  const QubitOperator h0 = hamiltonian_at(0.0, protocol);
  const SpectralDecomposition basis0 = eigendecompose(h0);
  const std::array<double, 2> p0 = cfg.initial.kind == InitialState::Kind::thermal
                                       ? thermal_populations({cfg.initial.beta}, h0)
                                       : std::array<double, 2>{1.0, 0.0};
  const double dt = protocol.tau / static_cast<double>(cfg.steps);

  // Feedback references for every possible starting state (read-only, shared).
  std::array<std::shared_ptr<const ReferenceTrajectory>, 2> level_refs;
  std::shared_ptr<const ReferenceTrajectory> explicit_ref;
  if (fb.enabled) {
    if (cfg.initial.kind == InitialState::Kind::explicit_state) {
      explicit_ref = std::make_shared<const ReferenceTrajectory>(
          reference_trajectory(cfg.initial.state, protocol, cfg.steps));
    } else {
      for (int n = 0; n < 2; ++n) {
        if (cfg.initial.kind == InitialState::Kind::eigenstate && n != cfg.initial.level) continue;
        level_refs[n] = std::make_shared<const ReferenceTrajectory>(
            reference_trajectory(as_density(basis0.projector(n)), protocol, cfg.steps));
      }
    }
  }

  std::vector<TrajectorySummary> summaries(cfg.n_traj);
  std::vector<std::vector<DensityMatrix>> states(cfg.n_traj);
  std::vector<TrajectoryRecord> records(cfg.keep_records ? cfg.n_traj : 0);
  std::vector<double> times;
  std::once_flag times_once;

  parallel_for(cfg.n_traj, cfg.workers, [&](std::size_t i) {
    const std::uint64_t stream = cfg.stream_base + i;
    const Start start = initial_for(cfg.initial, basis0, p0, cfg.seed, stream);
    TrajectoryOptions opts;
    opts.record_stride = cfg.record_stride;
    opts.keep_increments = cfg.keep_records;
    if (fb.enabled) {
      opts.controller = make_gain_hook(fb, start.level >= 0 ? level_refs[start.level] : explicit_ref);
    }
    TrajectoryRecord rec;
    try {
      rec = integrate_trajectory(start.state, protocol, det, make_noise_process(cfg.seed, stream, det.s0, dt),
                                 cfg.scheme, cfg.steps, opts);
    } catch (const IntegrationError& e) {
      std::ostringstream msg;
      msg << "trajectory " << i << " (stream " << stream << "): " << e.what();
      throw EnsembleError(msg.str(), i, 0);
    }
    TrajectorySummary& s = summaries[i];
    s.initial_level = start.level;
    s.work = rec.ledger.w_cum;
    s.heat = rec.ledger.q_cum;
    s.delta_u = rec.ledger.u_now - rec.ledger.u0;
    s.max_residual = rec.ledger.max_residual;
    s.clamp_events = rec.clamp_events;
    s.max_violation = rec.max_violation;
    s.purity_drift = rec.purity_drift;
    s.transitions = rec.transitions;
    s.final_state = rec.final_state;
    std::call_once(times_once, [&] { times = rec.times; });
    states[i] = std::move(rec.states);
    if (cfg.keep_records) records[i] = std::move(rec);
  });

  EnsembleResult out;
  out.times = std::move(times);
  const std::size_t n_rec = out.times.size();
  const double n = static_cast<double>(cfg.n_traj);
  out.mean_state.resize(n_rec);
  out.se_state.resize(n_rec);
  for (std::size_t k = 0; k < n_rec; ++k) {
    std::array<double, 3> sum{}, sum2{};
    for (std::size_t i = 0; i < cfg.n_traj; ++i) {
      const DensityMatrix& r = states[i][k];
      const std::array<double, 3> c{r.rho11, r.rho12.real(), r.rho12.imag()};
      for (int j = 0; j < 3; ++j) sum[j] += c[j];
    }
    std::array<double, 3> mean{};
    for (int j = 0; j < 3; ++j) mean[j] = sum[j] / n;
    for (std::size_t i = 0; i < cfg.n_traj; ++i) {
      const DensityMatrix& r = states[i][k];
      const std::array<double, 3> c{r.rho11, r.rho12.real(), r.rho12.imag()};
      for (int j = 0; j < 3; ++j) sum2[j] += (c[j] - mean[j]) * (c[j] - mean[j]);
    }
    out.mean_state[k] = {mean[0], complex{mean[1], mean[2]}};
    for (int j = 0; j < 3; ++j) out.se_state[k][j] = cfg.n_traj > 1 ? std::sqrt(sum2[j] / (n - 1.0) / n) : 0.0;
  }

  double ws = 0.0, qs = 0.0;
  for (const auto& s : summaries) {
    ws += s.work;
    qs += s.heat;
    out.clamp_events += s.clamp_events;
    out.max_residual = std::max(out.max_residual, s.max_residual);
    out.max_violation = std::max(out.max_violation, s.max_violation);
    out.max_purity_drift = std::max(out.max_purity_drift, s.purity_drift);
  }
  out.work_mean = ws / n;
  out.heat_mean = qs / n;
  if (cfg.n_traj > 1) {
    double wv = 0.0, qv = 0.0;
    for (const auto& s : summaries) {
      wv += (s.work - out.work_mean) * (s.work - out.work_mean);
      qv += (s.heat - out.heat_mean) * (s.heat - out.heat_mean);
    }
    out.work_var = wv / (n - 1.0);
    out.heat_var = qv / (n - 1.0);
  }
  out.total_steps = cfg.n_traj * cfg.steps;
  out.trajectories = std::move(summaries);
  out.records = std::move(records);
  return out;
}

namespace {

StateDelta lindblad_rhs(const DensityMatrix& r, const QubitOperator& h, double gamma, double hbar) {
  const complex i{0.0, 1.0};
  const complex h11 = h.a11(), h22 = h.a22(), h12 = h.a12(), h21 = h.a21();
  const complex c11 = h12 * r.rho21() - r.rho12 * h21;
  const complex c12 = h11 * r.rho12 + h12 * r.rho22() - r.rho11 * h12 - r.rho12 * h22;
  return {(-i * c11 / hbar).real(), -i * c12 / hbar - gamma * r.rho12};
}

}  // namespace

std::vector<DensityMatrix> lindblad_reference(const DensityMatrix& init, const DriveProtocol& protocol,
                                              const DetectorModel& det, std::size_t steps,
                                              std::size_t record_stride) {
  protocol.validate();
  det.validate();
  if (steps == 0 || record_stride == 0 || steps % record_stride != 0) {
    throw std::invalid_argument("lindblad_reference: record_stride must divide a positive step count");
  }
  constexpr int kSub = 4;
  const double gamma = det.dephasing_rate();
  const double n_steps = static_cast<double>(steps);
  const double h_sub = protocol.tau / n_steps / kSub;
  std::vector<DensityMatrix> out;
  out.reserve(steps / record_stride + 1);
  DensityMatrix r = init;
  out.push_back(r);
  for (std::size_t k = 0; k < steps; ++k) {
    const QubitOperator h = hamiltonian_at(protocol.tau * (static_cast<double>(k + 1) / n_steps), protocol);
    for (int s = 0; s < kSub; ++s) {
      const StateDelta k1 = lindblad_rhs(r, h, gamma, protocol.hbar);
      const StateDelta k2 = lindblad_rhs(r + (0.5 * h_sub) * k1, h, gamma, protocol.hbar);
      const StateDelta k3 = lindblad_rhs(r + (0.5 * h_sub) * k2, h, gamma, protocol.hbar);
      const StateDelta k4 = lindblad_rhs(r + h_sub * k3, h, gamma, protocol.hbar);
      r = r + (h_sub / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    if ((k + 1) % record_stride == 0) out.push_back(r);
  }
  return out;
}

Matrix2 unitary_transition_matrix(const DriveProtocol& protocol, std::size_t steps) {
  const SpectralDecomposition b0 = eigendecompose(hamiltonian_at(0.0, protocol));
  const SpectralDecomposition bt = eigendecompose(hamiltonian_at(protocol.tau, protocol));
  Matrix2 p{};
  for (int n = 0; n < 2; ++n) {
    const auto ref = reference_trajectory(as_density(b0.projector(n)), protocol, steps);
    for (int m = 0; m < 2; ++m) p[m][n] = expectation(ref.states.back(), bt.projector(m));
  }
  return p;
}

TransitionExperiment run_transition_experiment(const EnsembleConfig& cfg, const DriveProtocol& protocol,
                                               const DetectorModel& det, const FeedbackParams& fb) {
  TransitionExperiment ex;
  ex.basis_0 = eigendecompose(hamiltonian_at(0.0, protocol));
  ex.basis_tau = eigendecompose(hamiltonian_at(protocol.tau, protocol));
  for (int n = 0; n < 2; ++n) {
    EnsembleConfig c = cfg;
    c.initial = InitialState::eigenstate(n);
    c.stream_base = cfg.stream_base + static_cast<std::uint64_t>(n) * cfg.n_traj;
    c.record_stride = cfg.steps;
    c.keep_records = false;
    EnsembleResult r = run_ensemble(c, protocol, det, fb);
    auto& column = ex.trajectories[n];
    column.reserve(r.trajectories.size());
    for (const auto& s : r.trajectories) column.push_back(s.transitions);
    transition_decomposition(n, column, ex.decomposition);
    ex.clamp_events += r.clamp_events;
    ex.total_steps += r.total_steps;
    ex.max_residual = std::max(ex.max_residual, r.max_residual);
  }
  return ex;
}

}  // namespace qtraj
