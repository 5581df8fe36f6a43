// Command-line driver: `run <config>` and `compare <reportA> <reportB>`.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ddpecann/config.hpp"
#include "ddpecann/ddm.hpp"
#include "ddpecann/errors.hpp"
#include "ddpecann/report.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;

int run_command(const std::string& config_path, std::optional<std::uint64_t> seed,
                std::optional<std::string> out, std::vector<std::string> overrides, bool quiet) {
  using namespace ddpecann;
  if (seed) overrides.push_back("run.seed=" + std::to_string(*seed));
  if (out) overrides.push_back("run.output_dir=" + *out);

  RunConfig config;
  try {
    config = load_config(config_path, overrides);
    build_setup(config);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const GeometryError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  const std::filesystem::path dir(config.output_dir);
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "config.ini") << to_ini(config);

  ReportWriter report(dir / "report.csv");
  auto observer = [&](const IterationRecord& rec) {
    report(rec);
    if (!quiet)
      std::cout << "iteration " << rec.iteration << "/" << config.outer_iterations
                << "  max E_r = " << sci(rec.max_rel_l2) << "  max E_inf = " << sci(rec.max_abs)
                << std::endl;
  };

  try {
    const RunResult result = run(config, observer);
    const ErrorReport err = write_artifacts(dir, config, result);
    if (!quiet) std::cout << summary_text(config, err, result);
  } catch (const DivergenceError& e) {
    std::ofstream(dir / "summary.txt") << "problem: " << config.problem << "\ndiverged: " << e.what()
                                       << "\n";
    std::cerr << "divergence: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Domain-decomposed constrained neural PDE solver"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Train on a decomposed domain and write report artifacts");
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::vector<std::string> overrides;
  bool quiet = false;
  run->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "Override run.seed");
  run->add_option("--out", out, "Override run.output_dir");
  run->add_option("--override", overrides, "section.key=value (repeatable)");
  run->add_flag("-q,--quiet", quiet, "Only print errors");

  auto* compare = app.add_subcommand("compare", "Compare final-iteration maxima of two reports");
  std::string report_a, report_b;
  double tolerance = 5e-3;
  compare->add_option("reportA", report_a, "First report.csv")->required();
  compare->add_option("reportB", report_b, "Second report.csv")->required();
  compare->add_option("--tol", tolerance, "Pass threshold for maximum E_r");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return run_command(config_path, seed, out, overrides, quiet);
    const auto cmp = ddpecann::compare_table1(report_a, report_b, tolerance);
    std::cout << ddpecann::format_comparison(cmp);
    return kExitOk;
  } catch (const ddpecann::FormatError& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}
