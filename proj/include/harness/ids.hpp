#pragma once

// Closed enumerations shared across the kernel, with canonical string forms.
// Every enum here appears verbatim in on-disk records; renaming a value is a
// schema change.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace harness {

enum class ArtifactKind {
  plan,
  config,
  run_log,
  result_table,
  run_manifest,
  review,
  reflection,
  action_plan,
  draft,
  claim_registry,
  lesson,
  event_log,
  repair_task,
  other,
};

enum class EventKind {
  stage_start,
  stage_end,
  gate_decision,
  task_update,
  validator_finding,
  harness_update,
  budget_spend,
  rollback,
};

enum class StageId {
  ideation,
  planning,
  experiment,
  validation,
  review,
  reflection,
  writing,
  quality_gate,
};

// Audit groups used by the transition matrix.
enum class StageGroup { harness, experiment, validation, review, writing };

enum class RoleId {
  planner,
  experimenter,
  critic,
  supervisor,
  skeptic,
  methodologist,
  writer,
  editor,
  scheduler,
};

// Ordered: comparisons below use the declaration order.
enum class MaturityLevel {
  execution_complete = 0,
  pilot_signal = 1,
  analysis_ready = 2,
  paper_ready = 3,
  audited_claim = 4,
};

enum class EdgeKind {
  supports,
  validates,
  contradicts,
  config,
  raw_log,
  negative_result,
};

enum class ValidationStatus { unvalidated, passed, failed };

enum class ClaimUsage { pilot_mention, general_claim, headline };

enum class ValidatorId {
  duplicate_results,
  ci_inversion,
  stale_number,
  manifest_mismatch,
  unsupported_statistic,
  missing_review,
  pilot_boundary,
};

enum class Severity { critical, major, minor };

enum class RecommendedAction { block, downgrade, repair_task };

enum class GateOutcome { allow, downgrade, block };

enum class IssueCategory {
  system,
  experiment,
  writing,
  analysis,
  planning,
  pipeline,
  ideation,
  efficiency,
};

enum class IssueStatus { open, addressed, reopened };

enum class TaskScale { pilot, full };

enum class TaskStatus { pending, running, completed, failed, stopped };

enum class SpendOutcome { useful, wasteful, failed };

enum class DemandedAction {
  validation_task,
  plan_mutation,
  stop_branch,
  claim_downgrade,
};

enum class UpdateKind {
  gate,
  prompt_overlay,
  telemetry_requirement,
  scheduler_policy,
  repair_task,
  artifact_contract,
};

enum class ProtectedRule { no_weaken, no_delete, approval_required };

enum class ProtectedCheck { passed, requires_approval, rejected };

enum class ConversionKind { behavior, harness };

// Harness functions H1..H7, stored as a tag set on events.
enum class HarnessFunction { h1 = 1, h2, h3, h4, h5, h6, h7 };
using HfSet = std::vector<HarnessFunction>;

enum class InjectionKind {
  duplicate_files,
  missing_output,
  stale_table,
  count_mismatch,
  unsupported_stat,
  invert_ci,
  remove_review_score,
  pilot_as_general_claim,
};

// ---------------------------------------------------------------------------
// String conversions. from_* throws std::invalid_argument on unknown input.
// ---------------------------------------------------------------------------

std::string to_string(ArtifactKind k);
std::string to_string(EventKind k);
std::string to_string(StageId s);
std::string to_string(StageGroup g);
std::string to_string(RoleId r);
std::string to_string(MaturityLevel m);
std::string to_string(EdgeKind k);
std::string to_string(ValidationStatus v);
std::string to_string(ClaimUsage u);
std::string to_string(ValidatorId v);
std::string to_string(Severity s);
std::string to_string(RecommendedAction a);
std::string to_string(GateOutcome o);
std::string to_string(IssueCategory c);
std::string to_string(IssueStatus s);
std::string to_string(TaskScale s);
std::string to_string(TaskStatus s);
std::string to_string(SpendOutcome o);
std::string to_string(DemandedAction a);
std::string to_string(UpdateKind k);
std::string to_string(ProtectedRule r);
std::string to_string(ProtectedCheck c);
std::string to_string(ConversionKind k);
std::string to_string(HarnessFunction h);
std::string to_string(InjectionKind k);

ArtifactKind artifact_kind_from(std::string_view s);
EventKind event_kind_from(std::string_view s);
StageId stage_from(std::string_view s);
RoleId role_from(std::string_view s);
MaturityLevel maturity_from(std::string_view s);
EdgeKind edge_kind_from(std::string_view s);
ValidationStatus validation_status_from(std::string_view s);
ClaimUsage usage_from(std::string_view s);
ValidatorId validator_from(std::string_view s);
Severity severity_from(std::string_view s);
RecommendedAction action_from(std::string_view s);
GateOutcome gate_outcome_from(std::string_view s);
IssueCategory category_from(std::string_view s);
IssueStatus issue_status_from(std::string_view s);
TaskScale scale_from(std::string_view s);
TaskStatus task_status_from(std::string_view s);
SpendOutcome spend_outcome_from(std::string_view s);
DemandedAction demanded_action_from(std::string_view s);
UpdateKind update_kind_from(std::string_view s);
ProtectedRule protected_rule_from(std::string_view s);
ProtectedCheck protected_check_from(std::string_view s);
ConversionKind conversion_kind_from(std::string_view s);
HarnessFunction hf_from(std::string_view s);
InjectionKind injection_kind_from(std::string_view s);

// Best-effort category parse for reflection normalization: exact match or
// nullopt (the router coerces unknowns to the closest category and logs it).
std::optional<IssueCategory> category_try_from(std::string_view s);

StageGroup stage_group(StageId s);

inline bool maturity_at_least(MaturityLevel a, MaturityLevel b) {
  return static_cast<int>(a) >= static_cast<int>(b);
}

inline MaturityLevel maturity_below(MaturityLevel m) {
  int v = static_cast<int>(m);
  return v <= 0 ? MaturityLevel::execution_complete
                : static_cast<MaturityLevel>(v - 1);
}

inline MaturityLevel maturity_above(MaturityLevel m) {
  int v = static_cast<int>(m);
  return v >= 4 ? MaturityLevel::audited_claim
                : static_cast<MaturityLevel>(v + 1);
}

std::vector<StageId> all_stages();
std::vector<IssueCategory> all_categories();
std::vector<RoleId> all_roles();
std::vector<ValidatorId> all_validators();

} // namespace harness
