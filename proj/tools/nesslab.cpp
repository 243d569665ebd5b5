#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "nesslab/runner.hpp"

using namespace nesslab;

int main(int argc, char** argv) {
  CLI::App app{"Heat-conduction laboratory for oscillator and exchange lattices"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 1;
  int replicas = 1;
  int jobs = 0;
  app.add_option("--config", config_path, "JSON experiment description");
  app.add_option("--seed", seed, "master seed; every stream is derived from it");
  app.add_option("--out", out_dir, "output directory (default from the config)");
  app.add_option("--replicas", replicas, "independent replicas for the chosen study");
  app.add_option("--jobs", jobs, "worker threads (NESSLAB_JOBS when omitted)");

  const std::pair<const char*, const char*> studies[] = {
      {"run", "steady-state simulation of the configured lattice"},
      {"sweep", "finite-size conductivity scan over several lengths"},
      {"oracle", "exact covariance observables for quadratic chains"},
      {"gk", "equilibrium current-autocorrelation conductivity"},
      {"ldf", "entropy production statistics over finite windows"},
      {"kmp", "stochastic energy-exchange chain"},
  };
  for (const auto& [name, help] : studies) app.add_subcommand(name, help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    ExperimentConfig config =
        config_path.empty() ? ExperimentConfig{} : load_config(config_path);
    config.study = study_from_name(app.get_subcommands().front()->get_name());
    if (app.count("--seed")) config.seed = seed;
    config.integrator.seed = config.seed;
    if (app.count("--out")) config.output = out_dir;
    if (app.count("--jobs")) config.jobs = jobs;
    if (app.count("--replicas")) {
      config.run.replicas = replicas;
      config.sweep.replicas = replicas;
      config.gk.options.replicas = replicas;
    }

    const ResultRecord record = run_experiment(config);
    if (record.failed) {
      std::cerr << "nesslab: every replica failed; see " << record.output
                << "/summary.json\n";
      return 3;
    }
    std::cout << "wrote " << record.output << "/summary.json\n";
    return 0;
  } catch (const SpecError& e) {
    std::cerr << "nesslab: config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericsError& e) {
    std::cerr << "nesslab: numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "nesslab: " << e.what() << "\n";
    return 1;
  }
}
