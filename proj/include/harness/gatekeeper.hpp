#pragma once

// Quality gate and validators. Validators are pure over artifact bytes on
// disk (they re-hash and re-read live content, so a file mutated after
// registration is still caught); the gate aggregates findings into an
// allow/downgrade/block decision per the config action map. Only a
// missing review score hard-blocks with a rollback target; evidence
// findings restrict writing (downgrade) and route into repair.

#include <optional>
#include <string>
#include <vector>

#include "harness/config.hpp"
#include "harness/evidence.hpp"
#include "harness/ids.hpp"
#include "harness/workspace.hpp"

namespace harness {

struct ValidatorFinding {
  std::string id; // assigned when logged
  ValidatorId validator = ValidatorId::duplicate_results;
  std::string failure_class;
  std::vector<std::string> offending_artifacts; // non-empty
  Severity severity = Severity::critical;
  RecommendedAction recommended_action = RecommendedAction::downgrade;
  std::string detail;

  json to_json() const;
  static ValidatorFinding from_json(const json& j);
};

struct GateDecision {
  std::string gate_id;
  GateOutcome outcome = GateOutcome::allow;
  std::vector<ValidatorFinding> findings;
  std::optional<std::pair<int, StageId>> rollback_target;
  std::string reason;

  bool has_critical() const;
  json to_json() const;
  static GateDecision from_json(const json& j);
};

struct IntervalStat {
  std::string name;
  double point = 0, lower = 0, upper = 0;
  std::string artifact_id;
};

// -- validators ---------------------------------------------------------------

// One finding per live-hash equivalence class of size >= 2 that spans
// distinct declared conditions (a result's "condition" field, or its
// parent directory when undeclared).
std::vector<ValidatorFinding>
detect_duplicates(const Workspace& ws, const std::vector<std::string>& result_ids);

// Closed-interval rule: lower <= point <= upper; equality is legal.
std::vector<ValidatorFinding>
detect_ci_inversion(const std::vector<IntervalStat>& stats);

// Draft headline numbers vs the canonical source each cited claim names.
std::vector<ValidatorFinding>
detect_stale_numbers(const Workspace& ws, const ArtifactRecord& draft,
                     const ClaimRegistry& registry, double tolerance);

// Claim-declared config values vs the run manifest they cite.
std::vector<ValidatorFinding>
detect_manifest_mismatch(const Workspace& ws, const ClaimRecord& claim,
                         const ArtifactRecord& manifest);

// Claim statistics with no resolvable source or a conflicting stored value.
std::vector<ValidatorFinding>
detect_unsupported_statistics(const Workspace& ws,
                              const std::vector<ClaimRecord>& claims);

// Claim usage in drafts checked against the maturity ladder.
std::vector<ValidatorFinding>
check_pilot_boundary(const Workspace& ws, const ArtifactRecord& draft,
                     const ClaimRegistry& registry);

// Interval triples read from a result table's "intervals" list.
std::vector<IntervalStat> intervals_of(const Workspace& ws,
                                       const ArtifactRecord& table);

// -- gate ---------------------------------------------------------------------

class Gatekeeper {
public:
  Gatekeeper(Workspace& ws, const HarnessConfig& cfg, ClaimRegistry& registry);

  // Pure evaluation over the iteration's artifacts: no ids, no events.
  // open_major_objections forces at least a downgrade.
  GateDecision evaluate(int iteration, int open_major_objections = 0) const;

  // Evaluate, assign finding ids, and log validator-finding events plus the
  // gate-decision event. Decisions are immutable once logged.
  GateDecision run_quality_gate(int iteration, int open_major_objections = 0);

private:
  Workspace& ws_;
  const HarnessConfig& cfg_;
  ClaimRegistry& registry_;
};

// Render findings for the CLI.
std::string render_findings_table(const std::vector<ValidatorFinding>& findings);

} // namespace harness
