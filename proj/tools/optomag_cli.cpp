// optomag: run protocol experiments from a config file.
//
//   optomag <command> [--config FILE] [--out FILE] [--format csv|json]
//           [--seed N] [--trials N] [--workers N] [--sweep field:start:stop:count]
//
// Exit status: 0 ok, 2 parse error, 3 domain error, 4 runtime error,
// 5 oracle-compare failure.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "optomag/config.hpp"
#include "optomag/errors.hpp"
#include "optomag/experiments.hpp"

namespace {

constexpr int kExitParse = 2;
constexpr int kExitDomain = 3;
constexpr int kExitRuntime = 4;
constexpr int kExitOracle = 5;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heralded optomagnonic entanglement simulator"};
  std::string command;
  std::string config_path;
  std::string out_path;
  std::string format = "csv";
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> trials;
  std::optional<unsigned> workers;
  std::string sweep;

  app.add_option("command", command,
                 "fidelity-sweep | witness-sweep | mc-run | oracle-compare | baseline")
      ->required();
  app.add_option("--config", config_path, "flat key = value config file (default: built-in defaults)");
  app.add_option("--out", out_path, "output file (default: stdout)");
  app.add_option("--format", format, "csv or json");
  app.add_option("--seed", seed, "master RNG seed (overrides rng.seed)");
  app.add_option("--trials", trials, "Monte Carlo trials (overrides mc.trials)");
  app.add_option("--workers", workers, "worker threads, 0 = all cores (overrides mc.workers)");
  app.add_option("--sweep", sweep, "field:start:stop:count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitParse;
  }

  try {
    optomag::LoadedConfig loaded =
        config_path.empty() ? optomag::parse_config("") : optomag::load_config(config_path);
    optomag::ExperimentSpec spec;
    spec.command = optomag::parse_command(command);
    spec.output_format = optomag::parse_format(format);
    spec.output_path = out_path;
    spec.config = loaded.protocol;
    spec.run = loaded.run;
    if (seed) spec.config.rng_seed = *seed;
    if (trials) spec.run.mc_trials = *trials;
    if (workers) spec.run.mc_workers = *workers;
    if (!sweep.empty()) spec.sweep = optomag::parse_sweep(sweep);

    for (const auto& n : loaded.notices) std::cerr << "notice: " << n << '\n';
    const optomag::ExperimentResult result = optomag::run_experiment(spec);
    for (const auto& n : result.notices) std::cerr << "notice: " << n << '\n';

    const std::string text = optomag::render(result.table, spec.output_format);
    if (out_path.empty()) {
      std::cout << text;
      std::cout.flush();
    } else {
      std::ofstream out(out_path, std::ios::binary);
      if (!out) throw std::runtime_error("cannot open output file '" + out_path + "'");
      out << text;
      if (!out) throw std::runtime_error("failed writing '" + out_path + "'");
    }
    if (!result.passed) {
      std::cerr << "oracle-compare: at least one observable outside 4 sigma\n";
      return kExitOracle;
    }
    return 0;
  } catch (const optomag::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kExitParse;
  } catch (const optomag::DomainError& e) {
    std::cerr << "domain error: " << e.what() << '\n';
    return kExitDomain;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}
