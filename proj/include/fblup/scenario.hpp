#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fblup/group_action.hpp"
#include "fblup/json_io.hpp"
#include "fblup/vector_field.hpp"

namespace fblup {

struct ProbeSpec {
  std::string op;
  Json params = Json::object();
  Json asserts = Json::object();
};

/// A runnable scenario: the system under test (vector field family plus the
/// matrix action when one exists) and an ordered probe list.
struct Scenario {
  std::string name;
  std::string kind;  // lie_action | poly_foliation | bump_flow | pullback
  Json payload = Json::object();
  std::vector<ProbeSpec> probes;
  std::uint64_t seed = 0;
  std::string out_format = "json";  // "json" or "csv" (csv also writes json)

  std::shared_ptr<const VectorFieldFamily> family;
  std::shared_ptr<const LieAlgebraAction> action;  // null for pure foliations
};

struct ProbeResult {
  std::string op;
  bool executed = false;         // false: the handler threw
  bool assertions_passed = true;
  std::string error;
  Json report;
  std::string report_file;
};

struct RunResult {
  int exit_code = 0;  // 0 ok, 1 input error, 2 assertion or probe failure
  std::vector<ProbeResult> probes;
};

/// Parses a scenario file; throws InvalidInput with line/column diagnostics
/// on malformed JSON and with a JSON-path message on schema violations.
Scenario load_scenario_file(const std::string& path);

/// Built-in fixtures by name. Throws InvalidInput for unknown names.
Scenario load_builtin(const std::string& name);

/// (name, one-line description) of every built-in fixture.
std::vector<std::pair<std::string, std::string>> builtin_scenarios();

/// Executes the probes, writing one report per probe into out_dir as
/// "<probe-index>-<op>.json" (plus CSV mirrors when the scenario format is
/// csv). Probe seeds derive from the scenario seed and the probe index, so
/// parallel execution cannot change any report.
RunResult run_scenario(const Scenario& scenario, const std::string& out_dir,
                       bool parallel = false);

}  // namespace fblup
