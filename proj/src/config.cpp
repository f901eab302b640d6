#include "qtraj/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace qtraj {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void ExperimentConfig::validate() const {
  auto fail = [](std::string_view key, const std::string& why) {
    throw ConfigError(std::string(key) + ": " + why);
  };
  if (std::find(experiment_names().begin(), experiment_names().end(), experiment) == experiment_names().end()) {
    fail("experiment", "unknown experiment '" + experiment + "'");
  }
  if (!std::isfinite(epsilon)) fail("physics.epsilon", "must be finite");
  if (!(g >= 0.0) || !std::isfinite(g)) fail("drive.g", "must be finite and >= 0");
  if (!(nu >= 0.0) || !std::isfinite(nu)) fail("drive.nu", "must be finite and >= 0");
  if (!(dt > 0.0) || !std::isfinite(dt)) fail("grid.dt", "must be positive");
  if (tau_steps == 0) fail("grid.tau_steps", "must be at least 1");
  if (!std::isfinite(delta_i)) fail("detector.delta_i", "must be finite");
  if (!(s0 >= 0.0) || !std::isfinite(s0)) fail("detector.s0", "must be finite and >= 0");
  if (delta_i != 0.0 && !(s0 > 0.0)) fail("detector.s0", "must be positive when detector.delta_i != 0");
  if (!std::isfinite(i0)) fail("detector.i0", "must be finite");
  if (!(beta > 0.0)) fail("thermal.beta", "must be positive");
  if (n_traj == 0) fail("run.n_traj", "must be at least 1");
  if (record_stride == 0 || tau_steps % record_stride != 0) fail("run.record_stride", "must divide grid.tau_steps");
  if (initial_level != 0 && initial_level != 1) fail("run.initial_level", "must be 0 or 1");
  if (!(feedback_f >= 0.0) || !std::isfinite(feedback_f)) fail("feedback.f", "must be finite and >= 0");
}

ExperimentConfig preset(std::string_view name) {
  ExperimentConfig c;
  c.experiment = std::string(name);
  if (name == "fig1") {
    c.n_traj = 1;
  } else if (name == "fig2") {
    // defaults
  } else if (name == "fig3a" || name == "fig3b") {
    c.tau_steps = name == "fig3a" ? 1400 : 2500;
    c.feedback_enabled = true;
  } else if (name == "jarzynski") {
    c.feedback_enabled = true;
  } else {
    throw ConfigError("experiment: unknown experiment '" + std::string(name) + "'");
  }
  return c;
}

const std::vector<std::string_view>& config_keys() {
  static const std::vector<std::string_view> keys{
      "experiment",       "physics.epsilon", "drive.g",          "drive.nu",         "grid.dt",
      "grid.tau_steps",   "detector.delta_i", "detector.s0",     "detector.i0",      "thermal.beta",
      "run.scheme",       "run.n_traj",      "run.seed",         "run.record_stride", "run.initial_level",
      "feedback.f",       "feedback.enabled"};
  return keys;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_real(std::string_view key, std::string_view v) {
  // strtod accepts hex floats and exponents; the whole value must be consumed.
  const std::string s(v);
  char* end = nullptr;
  const double x = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw ConfigError(std::string(key) + ": expected a number, got '" + s + "'");
  }
  return x;
}

template <class Int>
Int parse_int(std::string_view key, std::string_view v) {
  Int x{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc{} || p != v.data() + v.size()) {
    throw ConfigError(std::string(key) + ": expected an integer, got '" + std::string(v) + "'");
  }
  return x;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw ConfigError(std::string(key) + ": expected true or false, got '" + std::string(v) + "'");
}

void assign(ExperimentConfig& c, std::string_view key, std::string_view v) {
  if (key == "experiment") c.experiment = std::string(v);
  else if (key == "physics.epsilon") c.epsilon = parse_real(key, v);
  else if (key == "drive.g") c.g = parse_real(key, v);
  else if (key == "drive.nu") c.nu = parse_real(key, v);
  else if (key == "grid.dt") c.dt = parse_real(key, v);
  else if (key == "grid.tau_steps") c.tau_steps = parse_int<std::size_t>(key, v);
  else if (key == "detector.delta_i") c.delta_i = parse_real(key, v);
  else if (key == "detector.s0") c.s0 = parse_real(key, v);
  else if (key == "detector.i0") c.i0 = parse_real(key, v);
  else if (key == "thermal.beta") c.beta = parse_real(key, v);
  else if (key == "run.scheme") {
    try {
      c.scheme = parse_scheme(v);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string(key) + ": " + e.what());
    }
  } else if (key == "run.n_traj") c.n_traj = parse_int<std::size_t>(key, v);
  else if (key == "run.seed") c.seed = parse_int<std::uint64_t>(key, v);
  else if (key == "run.record_stride") c.record_stride = parse_int<std::size_t>(key, v);
  else if (key == "run.initial_level") c.initial_level = parse_int<int>(key, v);
  else if (key == "feedback.f") c.feedback_f = parse_real(key, v);
  else if (key == "feedback.enabled") c.feedback_enabled = parse_bool(key, v);
  else throw ConfigError(std::string(key) + ": unknown key");
}

}  // namespace

ExperimentConfig parse_config(std::string_view text, const ExperimentConfig& base) {
  ExperimentConfig c = base;
  std::vector<std::string> seen;
  std::size_t line_no = 0;
  bool first_assignment = true;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + std::string(key) + ": duplicate key");
    }
    seen.emplace_back(key);
    try {
      if (key == "experiment" && first_assignment) {
        c = preset(value);
      } else {
        assign(c, key, value);
      }
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
    first_assignment = false;
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream o;
  o << "experiment = " << c.experiment << '\n'
    << "physics.epsilon = " << format_double(c.epsilon) << '\n'
    << "drive.g = " << format_double(c.g) << '\n'
    << "drive.nu = " << format_double(c.nu) << '\n'
    << "grid.dt = " << format_double(c.dt) << '\n'
    << "grid.tau_steps = " << c.tau_steps << '\n'
    << "detector.delta_i = " << format_double(c.delta_i) << '\n'
    << "detector.s0 = " << format_double(c.s0) << '\n'
    << "detector.i0 = " << format_double(c.i0) << '\n'
    << "thermal.beta = " << format_double(c.beta) << '\n'
    << "run.scheme = " << to_string(c.scheme) << '\n'
    << "run.n_traj = " << c.n_traj << '\n'
    << "run.seed = " << c.seed << '\n'
    << "run.record_stride = " << c.record_stride << '\n'
    << "run.initial_level = " << c.initial_level << '\n'
    << "feedback.f = " << format_double(c.feedback_f) << '\n'
    << "feedback.enabled = " << (c.feedback_enabled ? "true" : "false") << '\n';
  return o.str();
}

CaptionRatios caption_ratios(const ExperimentConfig& c) {
  return {c.s0 / (c.delta_i * c.delta_i) / c.dt, 1.0 / c.g / c.dt, 1.0 / c.epsilon / c.dt,
          static_cast<double>(c.tau_steps)};
}

}  // namespace qtraj
