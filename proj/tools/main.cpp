#include <cstdio>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fblup/errors.hpp"
#include "fblup/log.hpp"
#include "fblup/scenario.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Blow-up computations for singular foliations and Lie group actions"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string builtin_name;
  std::string out_dir = "reports";
  std::optional<std::uint64_t> seed_override;
  bool parallel = false;

  CLI::App* run = app.add_subcommand("run", "Execute a scenario and write per-probe reports");
  run->add_option("scenario", scenario_path, "Scenario JSON file");
  run->add_option("--builtin", builtin_name, "Run a built-in scenario by name");
  run->add_option("--out", out_dir, "Report output directory")->capture_default_str();
  run->add_option("--seed", seed_override, "Override the scenario seed");
  run->add_flag("--parallel", parallel, "Run probes in parallel (reports are unchanged)");

  CLI::App* examples = app.add_subcommand("examples", "List built-in scenarios");

  CLI11_PARSE(app, argc, argv);

  if (examples->parsed()) {
    for (const auto& [name, description] : fblup::builtin_scenarios())
      std::printf("%-18s %s\n", name.c_str(), description.c_str());
    return 0;
  }

  fblup::Scenario scenario;
  try {
    if (!builtin_name.empty()) {
      scenario = fblup::load_builtin(builtin_name);
    } else if (!scenario_path.empty()) {
      scenario = fblup::load_scenario_file(scenario_path);
    } else {
      std::fprintf(stderr, "run: provide a scenario file or --builtin NAME\n");
      return 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return 1;
  }
  if (seed_override) scenario.seed = *seed_override;

  fblup::RunResult result;
  try {
    result = fblup::run_scenario(scenario, out_dir, parallel);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "runner error: %s\n", e.what());
    return 2;
  }

  int failed = 0;
  for (const auto& p : result.probes) {
    const bool ok = p.executed && p.assertions_passed;
    if (!ok) ++failed;
    std::printf("%-4s %s -> %s\n", ok ? "ok" : "FAIL", p.op.c_str(), p.report_file.c_str());
  }
  std::printf("%zu probe(s), %d failed\n", result.probes.size(), failed);
  return result.exit_code;
}
