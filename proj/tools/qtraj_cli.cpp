// qtraj: run figure presets or a config file.
//
//   qtraj fig2 --seed 7 --out results/
//   qtraj run --config results/config.resolved
//
// Exit codes: 0 ok, 1 usage, 2 config error, 3 integration or invariant failure.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "qtraj/experiment.hpp"

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n_traj;
  std::optional<std::string> scheme;
  std::optional<double> f;
  bool feedback = false;
  bool no_feedback = false;
  std::string out;
  unsigned workers = 0;
};

void add_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--seed", o.seed, "RNG seed");
  cmd->add_option("--n-traj", o.n_traj, "trajectories per ensemble");
  cmd->add_option("--scheme", o.scheme, "ito or stratonovich")->check(CLI::IsMember({"ito", "stratonovich"}));
  cmd->add_option("--f", o.f, "feedback strength");
  auto* on = cmd->add_flag("--feedback", o.feedback, "enable feedback");
  auto* off = cmd->add_flag("--no-feedback", o.no_feedback, "disable feedback");
  on->excludes(off);
  cmd->add_option("--out", o.out, "output directory (default $QTRAJ_OUT or ./out)");
  cmd->add_option("--workers", o.workers, "worker threads, 0 = all cores (results do not depend on it)");
}

void apply(qtraj::ExperimentConfig& c, const Overrides& o) {
  if (o.seed) c.seed = *o.seed;
  if (o.n_traj) c.n_traj = *o.n_traj;
  if (o.scheme) c.scheme = qtraj::parse_scheme(*o.scheme);
  if (o.f) c.feedback_f = *o.f;
  if (o.feedback) c.feedback_enabled = true;
  if (o.no_feedback) c.feedback_enabled = false;
  c.validate();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trajectories, work and heat of a weakly measured driven qubit"};
  app.require_subcommand(1);

  Overrides o;
  std::string config_path;
  auto* run = app.add_subcommand("run", "run the experiment described by a config file");
  run->add_option("--config", config_path, "config file (dotted key = value)")->required()->check(CLI::ExistingFile);
  add_flags(run, o);
  for (auto name : qtraj::experiment_names()) {
    add_flags(app.add_subcommand(std::string(name), "preset " + std::string(name)), o);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    CLI::App* cmd = app.get_subcommands().front();
    qtraj::ExperimentConfig cfg =
        cmd == run ? qtraj::load_config(config_path) : qtraj::preset(cmd->get_name());
    apply(cfg, o);
    std::string out = o.out;
    if (out.empty()) {
      const char* env = std::getenv("QTRAJ_OUT");
      out = env && *env ? env : "out";
    }
    for (const auto& p : qtraj::run_experiment(cfg, out, {o.workers})) std::cout << p.string() << '\n';
  } catch (const qtraj::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const qtraj::InvariantViolation& e) {
    std::cerr << "invariant violated: " << e.what() << '\n';
    return 3;
  } catch (const qtraj::EnsembleError& e) {
    std::cerr << "integration failed: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
