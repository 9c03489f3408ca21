// Command line front end: obstakl <driver> --config <file> [overrides].
#include <CLI11.hpp>
#include <Eigen/Core>
#include <cstdlib>
#include <iostream>
#include <string>

#include "obstakl/cli_io.hpp"
#include "obstakl/errors.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Adaptive mixed finite element solver for obstacle problems"};

  std::string driver, config_path, out_dir;
  int levels = 0;
  double beta = 0;
  bool uniform = false, timings = false;
  app.add_option("driver", driver, "membrane | torsion | bearing | generic")
      ->required();
  app.add_option("--config", config_path, "configuration file")->required();
  auto* levels_opt = app.add_option("--levels", levels, "adaptive levels");
  auto* beta_opt = app.add_option("--beta", beta, "marking threshold in (0,1)");
  auto* out_opt = app.add_option("--out", out_dir, "output directory");
  app.add_flag("--uniform", uniform, "refine everything instead of marking");
  app.add_flag("--timings", timings, "record measured seconds in the CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (const char* threads = std::getenv("OBSTAKL_THREADS")) {
    char* end = nullptr;
    long n = std::strtol(threads, &end, 10);
    if (end == threads || *end != '\0' || n < 1) {
      std::cerr << "error: OBSTAKL_THREADS must be a positive integer, got '"
                << threads << "'\n";
      return 1;
    }
    Eigen::setNbThreads(static_cast<int>(n));
  } else {
    Eigen::setNbThreads(1);
  }

  try {
    obstakl::RunConfig cfg = obstakl::load_config(config_path);
    cfg.driver = driver;
    if (levels_opt->count()) {
      if (levels < 1) throw obstakl::ConfigError("levels must be >= 1");
      cfg.levels = levels;
    }
    if (beta_opt->count()) {
      if (!(beta > 0.0 && beta < 1.0))
        throw obstakl::ConfigError("beta must lie strictly between 0 and 1");
      cfg.beta = beta;
    }
    if (out_opt->count()) cfg.out_dir = out_dir;
    if (uniform) cfg.uniform = true;
    if (timings) cfg.timings = true;

    obstakl::AdaptResult result = obstakl::run_driver(cfg);

    const obstakl::AdaptRecord& last = result.records.back();
    std::cout << cfg.driver << ": " << result.records.size() << " levels, "
              << last.num_dofs << " dofs, estimator " << last.eta_total
              << ", " << last.pdas_iterations << " active-set iterations\n";
    return 0;
  } catch (const obstakl::NonConvergenceError& e) {
    std::cerr << "solver failed to converge: " << e.what() << "\n";
    return 2;
  } catch (const obstakl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
