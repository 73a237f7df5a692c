// Command-line front end: `run` executes one experiment config, `verify`
// runs acceptance suites.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "lrising/acceptance.hpp"
#include "lrising/errors.hpp"
#include "lrising/experiment.hpp"

namespace {

enum ExitCode : int {
  kOk = 0,
  kOther = 1,
  kConfig = 2,
  kDomain = 3,
  kTolerance = 4,
  kEnumeration = 5,
};

int report(const char* kind, const std::exception& e, int code) {
  std::cerr << "lrising: " << kind << ": " << e.what() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Long-range Ising lattice sums and Monte Carlo"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  int threads = 1;
  auto* run = app.add_subcommand("run", "Execute an experiment config");
  run->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "Master seed (overrides the config)");
  run->add_option("--out-dir", out_dir, "Directory for artifacts");
  run->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  std::string suite = "all";
  auto* verify = app.add_subcommand("verify", "Run acceptance suites");
  verify->add_option("suite", suite, "sums, energy, mc-exact, mc, exploratory or all");
  verify->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*run) {
      lrising::ExperimentConfig cfg = lrising::load_config(config_path);
      if (seed) {
        cfg.seed = *seed;
        cfg.source["seed"] = *seed;
      }
      const auto summary = lrising::run_experiment(cfg, out_dir, threads);
      std::cout << summary.line << '\n';
      return kOk;
    }
    lrising::acceptance::Hooks hooks;
    hooks.threads = threads;
    bool all = true;
    for (int id : lrising::acceptance::suite_criteria(suite)) {
      const auto r = lrising::acceptance::run_criterion(id, hooks);
      std::cout << lrising::acceptance::report_line(r) << std::endl;
      all = all && r.pass;
    }
    return all ? kOk : kOther;
  } catch (const lrising::ConfigError& e) {
    return report("config error", e, kConfig);
  } catch (const lrising::DomainError& e) {
    return report("domain error", e, kDomain);
  } catch (const lrising::ToleranceNotMet& e) {
    return report("tolerance not met", e, kTolerance);
  } catch (const lrising::EnumerationCapExceeded& e) {
    return report("enumeration cap exceeded", e, kEnumeration);
  } catch (const std::exception& e) {
    return report("error", e, kOther);
  }
}
