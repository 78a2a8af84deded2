#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "qarrival/scenario.hpp"

namespace {

enum Exit { ok = 0, parse_error = 2, no_convergence = 3, invalid_params = 4 };

int exit_code(qarrival::ErrorKind kind) {
  switch (kind) {
    case qarrival::ErrorKind::numeric_failure:
    case qarrival::ErrorKind::infeasible_response:
      return no_convergence;
    default:
      return invalid_params;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Arrival-time equilibria for a queue with two service beliefs"};
  app.require_subcommand(1);
  auto* run = app.add_subcommand("run", "Run a scenario file and write cdf.csv / summary.txt");
  std::string scenario_path, out_dir = "out";
  std::optional<long> seed;
  std::vector<std::string> overrides;
  run->add_option("scenario", scenario_path, "Scenario file (INI)")->required();
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--seed", seed, "Override run.seed");
  run->add_option("--override", overrides, "section.key=value (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? ok : parse_error;
  }

  try {
    auto file = qarrival::ScenarioFile::load(scenario_path);
    for (const auto& o : overrides) file.set_override(o);
    if (seed) file.set_override("run.seed=" + std::to_string(*seed));
    const auto scenario = qarrival::build_scenario(file);
    const auto result = qarrival::run_scenario(scenario);
    qarrival::write_outputs(result, out_dir);
    if (!result.converged) {
      std::cerr << "solver did not converge; see " << out_dir << "/summary.txt\n";
      return no_convergence;
    }
    return ok;
  } catch (const qarrival::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return parse_error;
  } catch (const qarrival::Error& e) {
    std::cerr << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
