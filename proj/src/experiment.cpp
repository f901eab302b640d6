#include "qtraj/experiment.hpp"

#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>

#include "json.hpp"

namespace qtraj {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr double kPublishedUnitaryDeltaF = -0.495;
constexpr double kPublishedFeedbackDeltaF1 = -0.488;  // tau_1 = 1400 dt
constexpr double kPublishedFeedbackDeltaF2 = -0.496;  // tau_2 = 2500 dt

json config_json(const ExperimentConfig& c) {
  json j;
  j["experiment"] = c.experiment;
  j["physics.epsilon"] = c.epsilon;
  j["drive.g"] = c.g;
  j["drive.nu"] = c.nu;
  j["grid.dt"] = c.dt;
  j["grid.tau_steps"] = c.tau_steps;
  j["detector.delta_i"] = c.delta_i;
  j["detector.s0"] = c.s0;
  j["detector.i0"] = c.i0;
  j["thermal.beta"] = c.beta;
  j["run.scheme"] = std::string(to_string(c.scheme));
  j["run.n_traj"] = c.n_traj;
  j["run.seed"] = c.seed;
  j["run.record_stride"] = c.record_stride;
  j["run.initial_level"] = c.initial_level;
  j["feedback.f"] = c.feedback_f;
  j["feedback.enabled"] = c.feedback_enabled;
  return j;
}

json matrix_json(const Matrix2& m) { return json::array({json::array({m[0][0], m[0][1]}), json::array({m[1][0], m[1][1]})}); }

json decomposition_json(const TransitionDecomposition& td) {
  json j;
  j["p0"] = matrix_json(td.p0);
  j["p_tau"] = matrix_json(td.p_tau);
  j["dp_w"] = matrix_json(td.dp_w);
  j["dp_q"] = matrix_json(td.dp_q);
  j["se_p_tau"] = matrix_json(td.se_p_tau);
  j["se_dp_w"] = matrix_json(td.se_dp_w);
  j["se_dp_q"] = matrix_json(td.se_dp_q);
  j["n_traj"] = json::array({td.n_traj[0], td.n_traj[1]});
  j["max_trajectory_identity_error"] = td.max_trajectory_identity_error;
  return j;
}

class Writer {
 public:
  Writer(fs::path dir, const ExperimentConfig& cfg) : dir_(std::move(dir)) {
    fs::create_directories(dir_);
    write_text("config.resolved", serialize_config(cfg));
  }

  void write_text(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream out(p, std::ios::binary);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + p.string());
    written_.push_back(p);
  }
  void write_json(const std::string& name, const json& j) { write_text(name, j.dump(2) + "\n"); }

  std::vector<fs::path> done() { return std::move(written_); }

 private:
  fs::path dir_;
  std::vector<fs::path> written_;
};

EnsembleConfig ensemble_config(const ExperimentConfig& c, const RunOptions& opts) {
  EnsembleConfig e;
  e.n_traj = c.n_traj;
  e.seed = c.seed;
  e.scheme = c.scheme;
  e.steps = c.tau_steps;
  e.record_stride = c.tau_steps;
  e.workers = opts.workers;
  return e;
}

void check(const TransitionExperiment& ex, const std::string& label) {
  try {
    ex.decomposition.check_invariants(1e-10);
  } catch (const std::logic_error& e) {
    throw InvariantViolation(label + ": " + e.what());
  }
  if (ex.decomposition.max_trajectory_identity_error > 1e-10) {
    throw InvariantViolation(label + ": per-trajectory identity error " +
                             format_double(ex.decomposition.max_trajectory_identity_error));
  }
}

void run_fig1(const ExperimentConfig& c, Writer& w) {
  const DriveProtocol protocol = c.protocol();
  const DetectorModel det = c.detector();
  const DensityMatrix init = as_density(eigendecompose(hamiltonian_at(0.0, protocol)).projector(c.initial_level));
  TrajectoryOptions opts;
  if (c.feedback_enabled) {
    opts.controller = make_gain_hook(
        c.feedback(), std::make_shared<const ReferenceTrajectory>(reference_trajectory(init, protocol, c.tau_steps)));
  }
  const TrajectoryRecord rec = integrate_trajectory(init, protocol, det, make_noise_process(c.seed, 0, c.s0, c.dt),
                                                    c.scheme, c.tau_steps, opts);

  std::ostringstream csv;
  csv << "step,t,rho11,re_rho12,im_rho12,xi,current,dW,dQ,dU,W_cum,Q_cum\n";
  double w_cum = 0.0, q_cum = 0.0;
  DensityMatrix rho = init;
  auto row = [&](std::size_t k, double xi, double cur, const StepEnergetics& e) {
    csv << k << ',' << format_double(rec.times[k]) << ',' << format_double(rho.rho11) << ','
        << format_double(rho.rho12.real()) << ',' << format_double(rho.rho12.imag()) << ',' << format_double(xi)
        << ',' << format_double(cur) << ',' << format_double(e.work) << ',' << format_double(e.heat) << ','
        << format_double(e.d_u) << ',' << format_double(w_cum) << ',' << format_double(q_cum) << '\n';
  };
  // Row k carries the state at t_k and the increments of the step ending there.
  row(0, 0.0, 0.0, {});
  for (std::size_t k = 0; k < rec.steps; ++k) {
    const StepEnergetics& e = rec.energetics[k];
    w_cum += e.work;
    q_cum += e.heat;
    rho = rec.states[k + 1];
    row(k + 1, rec.decompositions[k].xi, rec.currents[k], e);
  }
  w.write_text("fig1.csv", csv.str());

  const double du = rec.ledger.u_now - rec.ledger.u0;
  const double drift = std::abs(du - rec.ledger.w_cum - rec.ledger.q_cum);
  if (rec.ledger.max_residual > 1e-12 || drift > 1e-14 * static_cast<double>(rec.steps)) {
    throw InvariantViolation("fig1: first law violated (step residual " + format_double(rec.ledger.max_residual) +
                             ", accumulated " + format_double(drift) + ")");
  }
  json j;
  j["config"] = config_json(c);
  j["work"] = rec.ledger.w_cum;
  j["heat"] = rec.ledger.q_cum;
  j["delta_u"] = du;
  j["max_step_residual"] = rec.ledger.max_residual;
  j["accumulated_residual"] = drift;
  j["clamp_events"] = rec.clamp_events;
  j["purity_drift"] = rec.purity_drift;
  w.write_json("fig1.json", j);
}

std::string decomposition_csv(const TransitionDecomposition& td) {
  std::ostringstream csv;
  csv << "m,n,p0,p_tau,se_p_tau,dp_w,se_dp_w,dp_q,se_dp_q\n";
  for (int m = 0; m < 2; ++m) {
    for (int n = 0; n < 2; ++n) {
      csv << m << ',' << n << ',' << format_double(td.p0[m][n]) << ',' << format_double(td.p_tau[m][n]) << ','
          << format_double(td.se_p_tau[m][n]) << ',' << format_double(td.dp_w[m][n]) << ','
          << format_double(td.se_dp_w[m][n]) << ',' << format_double(td.dp_q[m][n]) << ','
          << format_double(td.se_dp_q[m][n]) << '\n';
    }
  }
  return csv.str();
}

void run_fig2(const ExperimentConfig& c, const RunOptions& opts, Writer& w) {
  const auto ex = run_transition_experiment(ensemble_config(c, opts), c.protocol(), c.detector(), c.feedback());
  check(ex, "fig2");
  json j;
  j["config"] = config_json(c);
  j["energies_0"] = json::array({ex.basis_0.e_minus, ex.basis_0.e_plus});
  j["energies_tau"] = json::array({ex.basis_tau.e_minus, ex.basis_tau.e_plus});
  j["decomposition"] = decomposition_json(ex.decomposition);
  json single = json::array();
  for (int n = 0; n < 2; ++n) {
    const auto& t = ex.trajectories[n].front();
    single.push_back({{"n", n},
                      {"p_tau", json::array({t.p_tau[0], t.p_tau[1]})},
                      {"dp_w", json::array({t.dp_w[0], t.dp_w[1]})},
                      {"dp_q", json::array({t.dp_q[0], t.dp_q[1]})}});
  }
  j["single_trajectory"] = single;
  j["clamp_events"] = ex.clamp_events;
  j["total_steps"] = ex.total_steps;
  w.write_json("fig2.json", j);
  w.write_text("fig2.csv", decomposition_csv(ex.decomposition));
}

void run_fig3(const ExperimentConfig& c, const RunOptions& opts, Writer& w) {
  const DriveProtocol protocol = c.protocol();
  const Matrix2 unitary = unitary_transition_matrix(protocol, c.tau_steps);
  FeedbackParams off = c.feedback();
  off.enabled = false;
  FeedbackParams on = c.feedback();
  on.enabled = true;
  const auto plain = run_transition_experiment(ensemble_config(c, opts), protocol, c.detector(), off);
  const auto controlled = run_transition_experiment(ensemble_config(c, opts), protocol, c.detector(), on);
  check(plain, c.experiment + " without feedback");
  check(controlled, c.experiment + " with feedback");

  json j;
  j["config"] = config_json(c);
  j["unitary_p_tau"] = matrix_json(unitary);
  j["no_feedback"] = decomposition_json(plain.decomposition);
  j["feedback"] = decomposition_json(controlled.decomposition);
  w.write_json(c.experiment + ".json", j);

  std::ostringstream csv;
  csv << "m,n,p_unitary,p_no_feedback,se_no_feedback,p_feedback,se_feedback,dp_q_no_feedback,dp_q_feedback\n";
  const auto& a = plain.decomposition;
  const auto& b = controlled.decomposition;
  for (int m = 0; m < 2; ++m) {
    for (int n = 0; n < 2; ++n) {
      csv << m << ',' << n << ',' << format_double(unitary[m][n]) << ',' << format_double(a.p_tau[m][n]) << ','
          << format_double(a.se_p_tau[m][n]) << ',' << format_double(b.p_tau[m][n]) << ','
          << format_double(b.se_p_tau[m][n]) << ',' << format_double(a.dp_q[m][n]) << ','
          << format_double(b.dp_q[m][n]) << '\n';
    }
  }
  w.write_text(c.experiment + ".csv", csv.str());
}

json distribution_json(const DiscreteDistribution& d) {
  return {{"support", d.support}, {"probabilities", d.probabilities}};
}

void run_jarzynski(const ExperimentConfig& c, const RunOptions& opts, Writer& w) {
  const DriveProtocol protocol = c.protocol();
  const ThermalSpec thermal{c.beta};
  const QubitOperator h0 = hamiltonian_at(0.0, protocol);
  const QubitOperator ht = hamiltonian_at(protocol.tau, protocol);
  const auto p0 = thermal_populations(thermal, h0);
  const auto b0 = eigendecompose(h0);
  const auto bt = eigendecompose(ht);
  const double exact = free_energy_difference(thermal, h0, ht);

  const Matrix2 unitary = unitary_transition_matrix(protocol, c.tau_steps);
  const auto unitary_dist = tpm_distribution(p0, unitary, b0, bt);
  const double unitary_est = jarzynski_estimate(unitary_dist, c.beta).delta_f;

  FeedbackParams off = c.feedback();
  off.enabled = false;
  const auto plain = run_transition_experiment(ensemble_config(c, opts), protocol, c.detector(), off);
  check(plain, "jarzynski without feedback");
  const auto plain_est = jarzynski_estimate(p0, plain.decomposition, b0, bt, c.beta);

  json j;
  j["config"] = config_json(c);
  j["beta"] = c.beta;
  j["delta_f_exact"] = exact;
  j["paper_reference"] = kPublishedUnitaryDeltaF;
  j["published_feedback"] = {{"tau_1400", kPublishedFeedbackDeltaF1}, {"tau_2500", kPublishedFeedbackDeltaF2}};
  j["delta_f_unitary_tpm"] = unitary_est;
  if (c.feedback_enabled) {
    const auto controlled = run_transition_experiment(ensemble_config(c, opts), protocol, c.detector(), c.feedback());
    check(controlled, "jarzynski with feedback");
    const auto est = jarzynski_estimate(p0, controlled.decomposition, b0, bt, c.beta);
    j["delta_f_est"] = est.delta_f;
    j["standard_error"] = est.standard_error;
    j["relative_deviation"] = std::abs(est.delta_f - exact) / std::abs(exact);
    j["work_distribution"] = distribution_json(tpm_distribution(p0, controlled.decomposition.p_tau, b0, bt));
  } else {
    j["delta_f_est"] = nullptr;
  }
  j["delta_f_no_feedback"] = plain_est.delta_f;
  j["standard_error_no_feedback"] = plain_est.standard_error;
  j["energy_distribution_no_feedback"] = distribution_json(tpm_distribution(p0, plain.decomposition.p_tau, b0, bt));
  j["work_distribution_unitary"] = distribution_json(unitary_dist);
  w.write_json("jarzynski.json", j);
}

}  // namespace

std::vector<fs::path> run_experiment(const ExperimentConfig& cfg, const fs::path& out_dir, const RunOptions& opts) {
  cfg.validate();
  Writer w(out_dir, cfg);
  if (cfg.experiment == "fig1") run_fig1(cfg, w);
  else if (cfg.experiment == "fig2") run_fig2(cfg, opts, w);
  else if (cfg.experiment == "fig3a" || cfg.experiment == "fig3b") run_fig3(cfg, opts, w);
  else if (cfg.experiment == "jarzynski") run_jarzynski(cfg, opts, w);
  return w.done();
}

}  // namespace qtraj
