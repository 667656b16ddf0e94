// Scenario front door: configures and runs the simulation scenarios, writing
// CSV data, SVG plots and a manifest per run.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "wqed/scenarios.hpp"
#include "wqed/version.hpp"

int main(int argc, char** argv) {
  CLI::App app{"waveguide time-bin scattering scenarios"};
  app.set_version_flag("--version", std::string(wqed::kVersion));

  wqed::ScenarioConfig cfg;
  app.add_option("--scenario", cfg.scenario,
                 "one of: single-scatter, two-scatter, two-waveguide, feedback, benchmark, "
                 "convergence")
      ->required();
  app.add_option("--dt", cfg.dt, "time-bin width");
  app.add_option("--t-max", cfg.t_max, "end of the simulation grid");
  app.add_option("--gamma", cfg.gamma, "emitter decay rate");
  app.add_option("--gamma-left", cfg.gamma_left, "decay rate into the reflected guide");
  app.add_option("--gamma-right", cfg.gamma_right, "decay rate into the transmitted guide");
  app.add_option("--tau-g", cfg.tau_g, "Gaussian pulse width");
  app.add_option("--t0", cfg.t0, "Gaussian pulse center");
  app.add_option("--phi", cfg.phi, "feedback phase");
  app.add_option("--delay", cfg.delay, "feedback mirror round-trip delay");
  app.add_option("--out-dir", cfg.out_dir, "output directory");
  app.add_option("--format", cfg.format, "csv | svg | both");
  app.add_option("--substeps", cfg.substeps, "integrator substeps per bin");
  app.set_config("--config", "", "plain-text key=value configuration file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const wqed::RunManifest manifest = wqed::run_scenario(cfg);
    std::printf("wrote %s\n", manifest.path.string().c_str());
    for (const wqed::CheckResult& c : manifest.checks)
      std::printf("  [%s] %s = %.6g\n", c.passed ? "ok" : "FAIL", c.name.c_str(), c.value);
    return 0;
  } catch (const wqed::ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
