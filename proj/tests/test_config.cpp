#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "qtraj/experiment.hpp"

using namespace qtraj;
using doctest::Approx;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("qtraj_test_config_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("presets") {
  CHECK(preset("fig1").n_traj == 1);
  CHECK(preset("fig2").n_traj == 300);
  CHECK(preset("fig3a").tau_steps == 1400);
  CHECK(preset("fig3b").tau_steps == 2500);
  CHECK(preset("fig3b").feedback_f == 3.0);
  CHECK(preset("jarzynski").beta == 10.0);
  CHECK_THROWS_AS(preset("fig4"), ConfigError);
  for (auto name : experiment_names()) CHECK_NOTHROW(preset(name).validate());
}

TEST_CASE("fig1 preset reproduces the caption ratios") {
  const auto r = caption_ratios(preset("fig1"));
  CHECK(r.s0_over_di2 == Approx(2.5e5).epsilon(1e-12));
  CHECK(r.hbar_over_g == Approx(1.6e2).epsilon(1e-12));
  CHECK(r.hbar_over_eps == Approx(1e3).epsilon(1e-12));
  CHECK(r.tau == 3e3);
  CHECK(preset("fig1").nu == 8.0);
}

TEST_CASE("parse and serialize round trip") {
  ExperimentConfig c = preset("fig3a");
  c.seed = 123456789012345ull;
  c.epsilon = 0.1 + 1e-17;
  c.s0 = 1.0 / 3.0;
  c.scheme = Scheme::ito_euler;
  const auto back = parse_config(serialize_config(c));
  CHECK(serialize_config(back) == serialize_config(c));
  CHECK(back.s0 == c.s0);
  CHECK(back.seed == c.seed);
  CHECK(back.scheme == Scheme::ito_euler);
}

TEST_CASE("experiment line selects the preset for missing keys") {
  const auto c = parse_config("experiment = fig3b\nrun.n_traj = 10\n");
  CHECK(c.tau_steps == 2500);
  CHECK(c.feedback_enabled);
  CHECK(c.n_traj == 10);
}

TEST_CASE("config errors carry the key path") {
  auto message = [](const std::string& text) -> std::string {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return e.what();
    }
    return "";
  };
  CHECK(message("feedback.gain = 3\n").find("feedback.gain: unknown key") != std::string::npos);
  CHECK(message("drive.g = fast\n").find("drive.g") != std::string::npos);
  CHECK(message("drive.g = -1\n").find("drive.g") != std::string::npos);
  CHECK(message("grid.tau_steps = 3000\nrun.record_stride = 7\n").find("run.record_stride") != std::string::npos);
  CHECK(message("run.scheme = rk4\n").find("run.scheme") != std::string::npos);
  CHECK(message("run.seed = 1\nrun.seed = 2\n").find("duplicate") != std::string::npos);
  CHECK(message("no equals sign\n").find("line 1") != std::string::npos);
  CHECK(message("# comment only\n\nrun.seed = 4 # trailing\n").empty());
}

TEST_CASE("fig1 output schema") {
  ExperimentConfig c = preset("fig1");
  c.tau_steps = 300;
  c.dt = 0.1;
  const auto dir = scratch("fig1");
  const auto files = run_experiment(c, dir, {1});
  CHECK(files.size() == 3);
  std::istringstream csv(slurp(dir / "fig1.csv"));
  std::string header;
  std::getline(csv, header);
  CHECK(header == "step,t,rho11,re_rho12,im_rho12,xi,current,dW,dQ,dU,W_cum,Q_cum");
  std::size_t rows = 0;
  std::string line;
  double w = 0.0, q = 0.0, du = 0.0;
  while (std::getline(csv, line)) {
    ++rows;
    std::vector<double> v;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) v.push_back(std::stod(cell));
    REQUIRE(v.size() == 12);
    // each row obeys the first law to rounding
    CHECK(std::abs(v[9] - v[7] - v[8]) < 1e-12);
    w += v[7];
    q += v[8];
    du += v[9];
  }
  CHECK(rows == 301);
  const auto j = nlohmann::json::parse(slurp(dir / "fig1.json"));
  CHECK(j["config"]["run.seed"] == c.seed);
  CHECK(j["work"].get<double>() == Approx(w));
  CHECK(j["heat"].get<double>() == Approx(q));
  CHECK(std::abs(j["delta_u"].get<double>() - du) < 1e-12);
  fs::remove_all(dir);
}

TEST_CASE("fig2 output carries the decomposition") {
  ExperimentConfig c = preset("fig2");
  c.n_traj = 20;
  c.tau_steps = 500;
  c.dt = 0.06;
  const auto dir = scratch("fig2");
  run_experiment(c, dir, {1});
  const auto j = nlohmann::ordered_json::parse(slurp(dir / "fig2.json"));
  std::vector<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
  CHECK(keys.front() == "config");
  const auto& d = j["decomposition"];
  for (const char* k : {"p0", "p_tau", "dp_w", "dp_q"}) CHECK(d.contains(k));
  for (int m = 0; m < 2; ++m) {
    for (int n = 0; n < 2; ++n) {
      const double gap = d["p_tau"][m][n].get<double>() - d["p0"][m][n].get<double>() -
                         d["dp_w"][m][n].get<double>() - d["dp_q"][m][n].get<double>();
      CHECK(std::abs(gap) < 1e-10);
    }
  }
  CHECK(fs::exists(dir / "fig2.csv"));
  fs::remove_all(dir);
}

TEST_CASE("resolved config reruns bit-identically") {
  ExperimentConfig c = preset("fig3a");
  c.n_traj = 8;
  c.tau_steps = 140;
  c.dt = 0.1;
  c.seed = 77;
  const auto a = scratch("rt_a"), b = scratch("rt_b");
  run_experiment(c, a, {1});
  const auto again = load_config((a / "config.resolved").string());
  run_experiment(again, b, {3});
  for (const char* f : {"config.resolved", "fig3a.json", "fig3a.csv"}) CHECK(slurp(a / f) == slurp(b / f));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("jarzynski output") {
  ExperimentConfig c = preset("jarzynski");
  c.n_traj = 10;
  c.tau_steps = 300;
  c.dt = 0.1;
  const auto dir = scratch("jz");
  run_experiment(c, dir, {1});
  const auto j = nlohmann::json::parse(slurp(dir / "jarzynski.json"));
  CHECK(j["paper_reference"].get<double>() == -0.495);
  CHECK(j["delta_f_exact"].get<double>() == Approx(-0.520256292261812).epsilon(1e-13));
  CHECK(std::abs(j["delta_f_unitary_tpm"].get<double>() - j["delta_f_exact"].get<double>()) < 1e-10);
  CHECK(j["delta_f_est"].is_number());
  fs::remove_all(dir);
}
