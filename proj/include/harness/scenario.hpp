#pragma once

// Scripted end-to-end runs with controlled failure injection. A scenario
// is pure data: per-role actions keyed by (iteration, stage, visit),
// injections that deterministically mutate registered artifact files, and
// the expected outcomes the run is judged against. The injection log is a
// sidecar next to the workspace, never inside it: the kernel must not be
// able to see ground truth.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "harness/auditor.hpp"
#include "harness/config.hpp"
#include "harness/evolver.hpp"
#include "harness/gatekeeper.hpp"
#include "harness/governor.hpp"
#include "harness/ids.hpp"
#include "harness/memory.hpp"
#include "harness/orchestrator.hpp"
#include "harness/roles.hpp"
#include "harness/workspace.hpp"

namespace harness {

struct Injection {
  int at_iteration = 0;
  InjectionKind kind = InjectionKind::stale_table;
  std::string target; // rel path under the iteration dir
  json params = json::object();

  json to_json() const;
  static Injection from_json(const json& j);
};

struct ScriptEntry {
  int iteration = 0;
  StageId stage = StageId::planning;
  int visit = 0; // 0: first pass; >0: re-entry after rollback
  std::vector<json> actions;
};

struct Scenario {
  std::string name;
  int iterations = 1;
  double budget_units = 100;
  bool evolution = true;
  bool memory = true;
  std::optional<std::vector<ValidatorId>> gate_validators;
  std::string global_memory_dir;
  std::map<RoleId, std::vector<ScriptEntry>> scripts;
  std::vector<Injection> injections;
  std::vector<json> expected_outcomes;

  // Schema check; throws before any workspace write.
  void validate() const;
  static Scenario from_json(const json& j);
  static Scenario from_file(const fs::path& p);
};

struct OutcomeCheck {
  std::string description;
  bool passed = false;
  std::string observed;
};

struct RunReport {
  std::string scenario;
  unsigned seed = 0;
  bool passed = false;
  std::vector<OutcomeCheck> checks;
  std::map<int, std::vector<GateOutcome>> gate_outcomes;
  int critical_findings = 0;
  int blocks = 0;
  ConversionSummary conversions;

  json to_json() const;
  std::string render() const;
};

// Deterministic mutation of registered artifacts. Returns the mutated
// artifact ids; rejects a kind/target mismatch or a missing target.
std::vector<std::string> inject(Workspace& ws, const Injection& inj);

class ScenarioDriver {
public:
  ScenarioDriver(Scenario scenario, fs::path root, unsigned seed = 0);

  RunReport run();

  // Sidecar paths (outside the workspace root).
  fs::path injection_log_path() const;

private:
  struct Kernel; // every subsystem bound to the live workspace
  void run_stage_actions(Kernel& k, int iteration, StageId stage, int visit);
  void apply_injections(Kernel& k, int iteration, StageId stage);
  void normalize_reflections(Kernel& k, int iteration);
  void evaluate_stop_conditions(Kernel& k, int iteration);
  void close_issues_for_repairs(Kernel& k, int iteration);
  RefResolver make_resolver(Kernel& k);
  void check_expectations(Kernel& k, RunReport& report);

  Scenario scenario_;
  fs::path root_;
  unsigned seed_ = 0;
  std::map<std::string, std::vector<std::string>> injected_artifacts_;
  std::vector<GateDecision> decisions_;
};

} // namespace harness
