#pragma once
// Run configuration: INI-style text with one section per module.
//
//   [problem]   name, wavenumber, n_meas, sigma
//   [partition] nx, ny
//   [network]   hidden = 20,20,20
//   [points]    interior, boundary, interface
//   [training]  epochs, outer_iterations, optimizer, lr, beta1, beta2, adam_eps,
//               robin_optimizer, robin_lr, gamma, smoothing, epsilon, robin_mode, robin_value,
//               multipliers, reset, parallel
//   [run]       seed, output_dir, grid, check_invariants
//
// Selecting a problem name loads its defaults; every other key overrides them.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ddpecann/alm.hpp"
#include "ddpecann/errors.hpp"
#include "ddpecann/geometry.hpp"
#include "ddpecann/local_trainer.hpp"
#include "ddpecann/problems.hpp"

namespace ddpecann {

inline const std::vector<std::string>& problem_names() {
  static const std::vector<std::string> names{
      "poisson_1way",   "poisson_2way",  "poisson_complex", "helmholtz_1way",
      "helmholtz_2way", "inverse_case1", "inverse_case2",   "single_domain"};
  return names;
}

struct RunConfig {
  std::string problem = "poisson_1way";
  int nx = 4;
  int ny = 1;
  std::vector<int> hidden{20, 20, 20};
  PointCounts points;
  int epochs = 500;
  int outer_iterations = 30;
  OptimizerSettings optimizer;
  DualSettings duals;
  RobinMode robin_mode = RobinMode::adaptive;
  double robin_value = 0.5;
  MultiplierGranularity multipliers = MultiplierGranularity::per_point;
  bool reset_all_interface_duals = true;  // false: reset lambda only
  bool parallel = true;
  double wavenumber = 1.0;
  int n_meas = 128;
  double sigma = 0.0;
  std::uint64_t seed = 1234;
  std::string output_dir = "out";
  int grid = 101;
  bool check_invariants = true;

  bool is_polar() const { return problem == "poisson_complex"; }
  bool is_inverse() const { return problem == "inverse_case1" || problem == "inverse_case2"; }

  void validate() const {
    if (std::find(problem_names().begin(), problem_names().end(), problem) == problem_names().end())
      throw ConfigError("unknown problem '" + problem + "'");
    auto positive = [](long long v, const char* key) {
      if (v < 1) throw ConfigError(std::string(key) + " must be positive");
    };
    positive(nx, "partition.nx");
    positive(ny, "partition.ny");
    positive(points.interior, "points.interior");
    positive(points.boundary, "points.boundary");
    positive(points.interface, "points.interface");
    positive(epochs, "training.epochs");
    positive(outer_iterations, "training.outer_iterations");
    positive(grid, "run.grid");
    for (int w : hidden) positive(w, "network.hidden");
    if (is_inverse()) positive(n_meas, "problem.n_meas");
    if (!(optimizer.lr > 0.0)) throw ConfigError("training.lr must be positive");
    if (!(duals.gamma > 0.0)) throw ConfigError("training.gamma must be positive");
    if (!(duals.smoothing >= 0.0 && duals.smoothing < 1.0))
      throw ConfigError("training.smoothing must lie in [0, 1)");
    if (!(duals.epsilon > 0.0)) throw ConfigError("training.epsilon must be positive");
    if (!(robin_value > 0.0 && robin_value < 1.0))
      throw ConfigError("training.robin_value must lie in (0, 1)");
    if (sigma < 0.0) throw ConfigError("problem.sigma must be >= 0");
    if (is_inverse() && (nx != 2 || ny != 2))
      throw ConfigError("inverse problems require partition.nx = partition.ny = 2");
  }
};

/// Defaults reproducing the reference experiments for each problem name.
inline RunConfig defaults_for(const std::string& problem) {
  RunConfig c;
  c.problem = problem;
  if (problem == "poisson_2way" || problem == "helmholtz_2way" || problem == "inverse_case1" ||
      problem == "inverse_case2") {
    c.nx = 2;
    c.ny = 2;
  } else if (problem == "single_domain") {
    c.nx = c.ny = 1;
    c.outer_iterations = 10;
  } else if (problem == "poisson_complex") {
    c.nx = c.ny = 1;
    c.hidden = {30, 30};
    c.points = {4096, 4096, 4096};
    c.epochs = 50;
  }
  if (problem == "inverse_case2") c.n_meas = 32;
  return c;
}

namespace detail {

inline std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_number(const std::string& text, const std::string& key) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    throw ConfigError("invalid value '" + text + "' for " + key);
  return value;
}

inline bool parse_bool(const std::string& text, const std::string& key) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("invalid boolean '" + text + "' for " + key);
}

inline std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace detail

/// Applies `section.key = value`. Throws ConfigError for unknown keys.
inline void apply_setting(RunConfig& c, const std::string& key, const std::string& value) {
  using detail::parse_bool;
  using detail::parse_number;
  if (key == "problem.name") {
    c.problem = value;
  } else if (key == "problem.wavenumber") {
    c.wavenumber = parse_number<double>(value, key);
  } else if (key == "problem.n_meas") {
    c.n_meas = parse_number<int>(value, key);
  } else if (key == "problem.sigma") {
    c.sigma = parse_number<double>(value, key);
  } else if (key == "partition.nx") {
    c.nx = parse_number<int>(value, key);
  } else if (key == "partition.ny") {
    c.ny = parse_number<int>(value, key);
  } else if (key == "network.hidden") {
    c.hidden.clear();
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = detail::trim(item);
      if (!item.empty()) c.hidden.push_back(parse_number<int>(item, key));
    }
  } else if (key == "points.interior") {
    c.points.interior = parse_number<int>(value, key);
  } else if (key == "points.boundary") {
    c.points.boundary = parse_number<int>(value, key);
  } else if (key == "points.interface") {
    c.points.interface = parse_number<int>(value, key);
  } else if (key == "training.epochs") {
    c.epochs = parse_number<int>(value, key);
  } else if (key == "training.outer_iterations") {
    c.outer_iterations = parse_number<int>(value, key);
  } else if (key == "training.optimizer") {
    if (value == "adam")
      c.optimizer.kind = OptimizerSettings::Kind::adam;
    else if (value == "gd")
      c.optimizer.kind = OptimizerSettings::Kind::gradient_descent;
    else
      throw ConfigError("training.optimizer must be adam or gd");
  } else if (key == "training.lr") {
    c.optimizer.lr = parse_number<double>(value, key);
  } else if (key == "training.robin_optimizer") {
    if (value == "adam")
      c.optimizer.robin_kind = OptimizerSettings::Kind::adam;
    else if (value == "gd")
      c.optimizer.robin_kind = OptimizerSettings::Kind::gradient_descent;
    else
      throw ConfigError("training.robin_optimizer must be adam or gd");
  } else if (key == "training.robin_lr") {
    c.optimizer.robin_lr = parse_number<double>(value, key);
  } else if (key == "training.beta1") {
    c.optimizer.beta1 = parse_number<double>(value, key);
  } else if (key == "training.beta2") {
    c.optimizer.beta2 = parse_number<double>(value, key);
  } else if (key == "training.adam_eps") {
    c.optimizer.eps = parse_number<double>(value, key);
  } else if (key == "training.gamma") {
    c.duals.gamma = parse_number<double>(value, key);
  } else if (key == "training.smoothing") {
    c.duals.smoothing = parse_number<double>(value, key);
  } else if (key == "training.epsilon") {
    c.duals.epsilon = parse_number<double>(value, key);
  } else if (key == "training.robin_mode") {
    if (value == "adaptive")
      c.robin_mode = RobinMode::adaptive;
    else if (value == "constant")
      c.robin_mode = RobinMode::constant;
    else if (value == "closed_form")
      c.robin_mode = RobinMode::closed_form;
    else
      throw ConfigError("training.robin_mode must be adaptive, constant or closed_form");
  } else if (key == "training.robin_value") {
    c.robin_value = parse_number<double>(value, key);
  } else if (key == "training.multipliers") {
    if (value == "point")
      c.multipliers = MultiplierGranularity::per_point;
    else if (value == "type")
      c.multipliers = MultiplierGranularity::per_type;
    else
      throw ConfigError("training.multipliers must be point or type");
  } else if (key == "training.reset") {
    if (value == "all")
      c.reset_all_interface_duals = true;
    else if (value == "lambda")
      c.reset_all_interface_duals = false;
    else
      throw ConfigError("training.reset must be all or lambda");
  } else if (key == "training.parallel") {
    c.parallel = parse_bool(value, key);
  } else if (key == "run.seed") {
    c.seed = parse_number<std::uint64_t>(value, key);
  } else if (key == "run.output_dir") {
    c.output_dir = value;
  } else if (key == "run.grid") {
    c.grid = parse_number<int>(value, key);
  } else if (key == "run.check_invariants") {
    c.check_invariants = parse_bool(value, key);
  } else {
    throw ConfigError("unknown key '" + key + "'");
  }
}

/// Parses config text. `overrides` ("section.key=value") are applied last.
/// Errors carry the offending line number.
inline RunConfig parse_config(const std::string& text,
                              const std::vector<std::string>& overrides = {}) {
  struct Entry {
    int line;
    std::string key, value;
  };
  std::vector<Entry> entries;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    auto hash = raw.find_first_of("#;");
    const std::string line = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
      section = detail::trim(line.substr(1, line.size() - 2));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    if (section.empty())
      throw ConfigError("line " + std::to_string(lineno) + ": key outside of a section");
    entries.push_back({lineno, section + "." + detail::trim(line.substr(0, eq)),
                       detail::trim(line.substr(eq + 1))});
  }
  for (const auto& o : overrides) {
    auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + o + "': expected key=value");
    entries.push_back({0, detail::trim(o.substr(0, eq)), detail::trim(o.substr(eq + 1))});
  }

  std::string problem = "poisson_1way";
  for (const auto& e : entries)
    if (e.key == "problem.name") problem = e.value;
  if (std::find(problem_names().begin(), problem_names().end(), problem) == problem_names().end())
    throw ConfigError("unknown problem '" + problem + "'");

  RunConfig c = defaults_for(problem);
  for (const auto& e : entries) {
    try {
      apply_setting(c, e.key, e.value);
    } catch (const ConfigError& err) {
      if (e.line == 0) throw ConfigError(std::string("override: ") + err.what());
      throw ConfigError("line " + std::to_string(e.line) + ": " + err.what());
    }
  }
  c.validate();
  return c;
}

inline RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), overrides);
}

/// Fully resolved config in the same format parse_config() reads.
inline std::string to_ini(const RunConfig& c) {
  using detail::format_number;
  std::ostringstream o;
  auto hidden = [&] {
    std::string s;
    for (std::size_t i = 0; i < c.hidden.size(); ++i) s += (i ? "," : "") + std::to_string(c.hidden[i]);
    return s;
  };
  const char* mode = c.robin_mode == RobinMode::adaptive   ? "adaptive"
                     : c.robin_mode == RobinMode::constant ? "constant"
                                                           : "closed_form";
  o << "[problem]\nname = " << c.problem << "\nwavenumber = " << format_number(c.wavenumber)
    << "\nn_meas = " << c.n_meas << "\nsigma = " << format_number(c.sigma) << "\n\n"
    << "[partition]\nnx = " << c.nx << "\nny = " << c.ny << "\n\n"
    << "[network]\nhidden = " << hidden() << "\n\n"
    << "[points]\ninterior = " << c.points.interior << "\nboundary = " << c.points.boundary
    << "\ninterface = " << c.points.interface << "\n\n"
    << "[training]\nepochs = " << c.epochs << "\nouter_iterations = " << c.outer_iterations
    << "\noptimizer = "
    << (c.optimizer.kind == OptimizerSettings::Kind::adam ? "adam" : "gd")
    << "\nlr = " << format_number(c.optimizer.lr) << "\nbeta1 = " << format_number(c.optimizer.beta1)
    << "\nbeta2 = " << format_number(c.optimizer.beta2)
    << "\nadam_eps = " << format_number(c.optimizer.eps) << "\nrobin_optimizer = "
    << (c.optimizer.robin_kind == OptimizerSettings::Kind::adam ? "adam" : "gd")
    << "\nrobin_lr = " << format_number(c.optimizer.robin_lr)
    << "\ngamma = " << format_number(c.duals.gamma)
    << "\nsmoothing = " << format_number(c.duals.smoothing)
    << "\nepsilon = " << format_number(c.duals.epsilon) << "\nrobin_mode = " << mode
    << "\nrobin_value = " << format_number(c.robin_value) << "\nmultipliers = "
    << (c.multipliers == MultiplierGranularity::per_point ? "point" : "type")
    << "\nreset = " << (c.reset_all_interface_duals ? "all" : "lambda")
    << "\nparallel = " << (c.parallel ? "true" : "false") << "\n\n"
    << "[run]\nseed = " << c.seed << "\noutput_dir = " << c.output_dir << "\ngrid = " << c.grid
    << "\ncheck_invariants = " << (c.check_invariants ? "true" : "false") << "\n";
  return o.str();
}

/// Partition and problem described by a config.
struct Setup {
  Partition partition;
  ProblemSpec problem;
};

inline Setup build_setup(const RunConfig& c) {
  c.validate();
  Setup s;
  if (c.is_polar()) {
    s.partition = make_polar_partition(PolarCurve::complex_outer(), PolarCurve::complex_interface());
  } else {
    s.partition = make_cartesian_partition(Box{}, c.nx, c.ny);
  }
  const bool helmholtz = c.problem.rfind("helmholtz", 0) == 0;
  s.problem = helmholtz ? helmholtz_manufactured(c.wavenumber) : poisson_manufactured();
  if (c.problem == "inverse_case1")
    s.problem = make_inverse_case(s.problem, InverseCase::missing_boundary, s.partition, c.n_meas,
                                  c.seed, c.sigma);
  else if (c.problem == "inverse_case2")
    s.problem = make_inverse_case(s.problem, InverseCase::limited_data, s.partition, c.n_meas,
                                  c.seed, c.sigma);
  return s;
}

}  // namespace ddpecann
