#include "harness/ids.hpp"

#include <algorithm>
#include <array>

namespace harness {
namespace {

template <typename E, std::size_t N>
std::string lookup(const std::array<std::pair<E, const char*>, N>& table, E v) {
  for (const auto& [e, s] : table)
    if (e == v) return s;
  throw std::invalid_argument("unmapped enum value");
}

template <typename E, std::size_t N>
E reverse(const std::array<std::pair<E, const char*>, N>& table,
          std::string_view s, const char* what) {
  for (const auto& [e, name] : table)
    if (s == name) return e;
  throw std::invalid_argument(std::string(what) + ": unknown value '" +
                              std::string(s) + "'");
}

constexpr std::array<std::pair<ArtifactKind, const char*>, 14> kArtifactKinds{{
    {ArtifactKind::plan, "plan"},
    {ArtifactKind::config, "config"},
    {ArtifactKind::run_log, "run-log"},
    {ArtifactKind::result_table, "result-table"},
    {ArtifactKind::run_manifest, "run-manifest"},
    {ArtifactKind::review, "review"},
    {ArtifactKind::reflection, "reflection"},
    {ArtifactKind::action_plan, "action-plan"},
    {ArtifactKind::draft, "draft"},
    {ArtifactKind::claim_registry, "claim-registry"},
    {ArtifactKind::lesson, "lesson"},
    {ArtifactKind::event_log, "event-log"},
    {ArtifactKind::repair_task, "repair-task"},
    {ArtifactKind::other, "other"},
}};

constexpr std::array<std::pair<EventKind, const char*>, 8> kEventKinds{{
    {EventKind::stage_start, "stage-start"},
    {EventKind::stage_end, "stage-end"},
    {EventKind::gate_decision, "gate-decision"},
    {EventKind::task_update, "task-update"},
    {EventKind::validator_finding, "validator-finding"},
    {EventKind::harness_update, "harness-update"},
    {EventKind::budget_spend, "budget-spend"},
    {EventKind::rollback, "rollback"},
}};

constexpr std::array<std::pair<StageId, const char*>, 8> kStages{{
    {StageId::ideation, "ideation"},
    {StageId::planning, "planning"},
    {StageId::experiment, "experiment"},
    {StageId::validation, "validation"},
    {StageId::review, "review"},
    {StageId::reflection, "reflection"},
    {StageId::writing, "writing"},
    {StageId::quality_gate, "quality-gate"},
}};

constexpr std::array<std::pair<StageGroup, const char*>, 5> kGroups{{
    {StageGroup::harness, "harness"},
    {StageGroup::experiment, "experiment"},
    {StageGroup::validation, "validation"},
    {StageGroup::review, "review"},
    {StageGroup::writing, "writing"},
}};

constexpr std::array<std::pair<RoleId, const char*>, 9> kRoles{{
    {RoleId::planner, "planner"},
    {RoleId::experimenter, "experimenter"},
    {RoleId::critic, "critic"},
    {RoleId::supervisor, "supervisor"},
    {RoleId::skeptic, "skeptic"},
    {RoleId::methodologist, "methodologist"},
    {RoleId::writer, "writer"},
    {RoleId::editor, "editor"},
    {RoleId::scheduler, "scheduler"},
}};

constexpr std::array<std::pair<MaturityLevel, const char*>, 5> kMaturity{{
    {MaturityLevel::execution_complete, "execution-complete"},
    {MaturityLevel::pilot_signal, "pilot-signal"},
    {MaturityLevel::analysis_ready, "analysis-ready"},
    {MaturityLevel::paper_ready, "paper-ready"},
    {MaturityLevel::audited_claim, "audited-claim"},
}};

constexpr std::array<std::pair<EdgeKind, const char*>, 6> kEdgeKinds{{
    {EdgeKind::supports, "supports"},
    {EdgeKind::validates, "validates"},
    {EdgeKind::contradicts, "contradicts"},
    {EdgeKind::config, "config"},
    {EdgeKind::raw_log, "raw-log"},
    {EdgeKind::negative_result, "negative-result"},
}};

constexpr std::array<std::pair<ValidationStatus, const char*>, 3> kValStatus{{
    {ValidationStatus::unvalidated, "unvalidated"},
    {ValidationStatus::passed, "passed"},
    {ValidationStatus::failed, "failed"},
}};

constexpr std::array<std::pair<ClaimUsage, const char*>, 3> kUsages{{
    {ClaimUsage::pilot_mention, "pilot-mention"},
    {ClaimUsage::general_claim, "general-claim"},
    {ClaimUsage::headline, "headline"},
}};

constexpr std::array<std::pair<ValidatorId, const char*>, 7> kValidators{{
    {ValidatorId::duplicate_results, "duplicate-results"},
    {ValidatorId::ci_inversion, "ci-inversion"},
    {ValidatorId::stale_number, "stale-number"},
    {ValidatorId::manifest_mismatch, "manifest-mismatch"},
    {ValidatorId::unsupported_statistic, "unsupported-statistic"},
    {ValidatorId::missing_review, "missing-review"},
    {ValidatorId::pilot_boundary, "pilot-boundary"},
}};

constexpr std::array<std::pair<Severity, const char*>, 3> kSeverities{{
    {Severity::critical, "critical"},
    {Severity::major, "major"},
    {Severity::minor, "minor"},
}};

constexpr std::array<std::pair<RecommendedAction, const char*>, 3> kActions{{
    {RecommendedAction::block, "block"},
    {RecommendedAction::downgrade, "downgrade"},
    {RecommendedAction::repair_task, "repair-task"},
}};

constexpr std::array<std::pair<GateOutcome, const char*>, 3> kOutcomes{{
    {GateOutcome::allow, "allow"},
    {GateOutcome::downgrade, "downgrade"},
    {GateOutcome::block, "block"},
}};

constexpr std::array<std::pair<IssueCategory, const char*>, 8> kCategories{{
    {IssueCategory::system, "system"},
    {IssueCategory::experiment, "experiment"},
    {IssueCategory::writing, "writing"},
    {IssueCategory::analysis, "analysis"},
    {IssueCategory::planning, "planning"},
    {IssueCategory::pipeline, "pipeline"},
    {IssueCategory::ideation, "ideation"},
    {IssueCategory::efficiency, "efficiency"},
}};

constexpr std::array<std::pair<IssueStatus, const char*>, 3> kIssueStatus{{
    {IssueStatus::open, "open"},
    {IssueStatus::addressed, "addressed"},
    {IssueStatus::reopened, "reopened"},
}};

constexpr std::array<std::pair<TaskScale, const char*>, 2> kScales{{
    {TaskScale::pilot, "pilot"},
    {TaskScale::full, "full"},
}};

constexpr std::array<std::pair<TaskStatus, const char*>, 5> kTaskStatus{{
    {TaskStatus::pending, "pending"},
    {TaskStatus::running, "running"},
    {TaskStatus::completed, "completed"},
    {TaskStatus::failed, "failed"},
    {TaskStatus::stopped, "stopped"},
}};

constexpr std::array<std::pair<SpendOutcome, const char*>, 3> kSpendOutcomes{{
    {SpendOutcome::useful, "useful"},
    {SpendOutcome::wasteful, "wasteful"},
    {SpendOutcome::failed, "failed"},
}};

constexpr std::array<std::pair<DemandedAction, const char*>, 4> kDemanded{{
    {DemandedAction::validation_task, "validation-task"},
    {DemandedAction::plan_mutation, "plan-mutation"},
    {DemandedAction::stop_branch, "stop-branch"},
    {DemandedAction::claim_downgrade, "claim-downgrade"},
}};

constexpr std::array<std::pair<UpdateKind, const char*>, 6> kUpdateKinds{{
    {UpdateKind::gate, "gate"},
    {UpdateKind::prompt_overlay, "prompt-overlay"},
    {UpdateKind::telemetry_requirement, "telemetry-requirement"},
    {UpdateKind::scheduler_policy, "scheduler-policy"},
    {UpdateKind::repair_task, "repair-task"},
    {UpdateKind::artifact_contract, "artifact-contract"},
}};

constexpr std::array<std::pair<ProtectedRule, const char*>, 3> kProtRules{{
    {ProtectedRule::no_weaken, "no-weaken"},
    {ProtectedRule::no_delete, "no-delete"},
    {ProtectedRule::approval_required, "approval-required"},
}};

constexpr std::array<std::pair<ProtectedCheck, const char*>, 3> kProtChecks{{
    {ProtectedCheck::passed, "passed"},
    {ProtectedCheck::requires_approval, "requires-approval"},
    {ProtectedCheck::rejected, "rejected"},
}};

constexpr std::array<std::pair<ConversionKind, const char*>, 2> kConvKinds{{
    {ConversionKind::behavior, "behavior"},
    {ConversionKind::harness, "harness"},
}};

constexpr std::array<std::pair<HarnessFunction, const char*>, 7> kHf{{
    {HarnessFunction::h1, "H1"},
    {HarnessFunction::h2, "H2"},
    {HarnessFunction::h3, "H3"},
    {HarnessFunction::h4, "H4"},
    {HarnessFunction::h5, "H5"},
    {HarnessFunction::h6, "H6"},
    {HarnessFunction::h7, "H7"},
}};

constexpr std::array<std::pair<InjectionKind, const char*>, 8> kInjections{{
    {InjectionKind::duplicate_files, "duplicate-files"},
    {InjectionKind::missing_output, "missing-output"},
    {InjectionKind::stale_table, "stale-table"},
    {InjectionKind::count_mismatch, "count-mismatch"},
    {InjectionKind::unsupported_stat, "unsupported-stat"},
    {InjectionKind::invert_ci, "invert-ci"},
    {InjectionKind::remove_review_score, "remove-review-score"},
    {InjectionKind::pilot_as_general_claim, "pilot-as-general-claim"},
}};

} // namespace

std::string to_string(ArtifactKind k) { return lookup(kArtifactKinds, k); }
std::string to_string(EventKind k) { return lookup(kEventKinds, k); }
std::string to_string(StageId s) { return lookup(kStages, s); }
std::string to_string(StageGroup g) { return lookup(kGroups, g); }
std::string to_string(RoleId r) { return lookup(kRoles, r); }
std::string to_string(MaturityLevel m) { return lookup(kMaturity, m); }
std::string to_string(EdgeKind k) { return lookup(kEdgeKinds, k); }
std::string to_string(ValidationStatus v) { return lookup(kValStatus, v); }
std::string to_string(ClaimUsage u) { return lookup(kUsages, u); }
std::string to_string(ValidatorId v) { return lookup(kValidators, v); }
std::string to_string(Severity s) { return lookup(kSeverities, s); }
std::string to_string(RecommendedAction a) { return lookup(kActions, a); }
std::string to_string(GateOutcome o) { return lookup(kOutcomes, o); }
std::string to_string(IssueCategory c) { return lookup(kCategories, c); }
std::string to_string(IssueStatus s) { return lookup(kIssueStatus, s); }
std::string to_string(TaskScale s) { return lookup(kScales, s); }
std::string to_string(TaskStatus s) { return lookup(kTaskStatus, s); }
std::string to_string(SpendOutcome o) { return lookup(kSpendOutcomes, o); }
std::string to_string(DemandedAction a) { return lookup(kDemanded, a); }
std::string to_string(UpdateKind k) { return lookup(kUpdateKinds, k); }
std::string to_string(ProtectedRule r) { return lookup(kProtRules, r); }
std::string to_string(ProtectedCheck c) { return lookup(kProtChecks, c); }
std::string to_string(ConversionKind k) { return lookup(kConvKinds, k); }
std::string to_string(HarnessFunction h) { return lookup(kHf, h); }
std::string to_string(InjectionKind k) { return lookup(kInjections, k); }

ArtifactKind artifact_kind_from(std::string_view s) {
  return reverse(kArtifactKinds, s, "artifact kind");
}
EventKind event_kind_from(std::string_view s) {
  return reverse(kEventKinds, s, "event kind");
}
StageId stage_from(std::string_view s) { return reverse(kStages, s, "stage"); }
RoleId role_from(std::string_view s) { return reverse(kRoles, s, "role"); }
MaturityLevel maturity_from(std::string_view s) {
  return reverse(kMaturity, s, "maturity");
}
EdgeKind edge_kind_from(std::string_view s) {
  return reverse(kEdgeKinds, s, "edge kind");
}
ValidationStatus validation_status_from(std::string_view s) {
  return reverse(kValStatus, s, "validation status");
}
ClaimUsage usage_from(std::string_view s) {
  return reverse(kUsages, s, "claim usage");
}
ValidatorId validator_from(std::string_view s) {
  return reverse(kValidators, s, "validator");
}
Severity severity_from(std::string_view s) {
  return reverse(kSeverities, s, "severity");
}
RecommendedAction action_from(std::string_view s) {
  return reverse(kActions, s, "recommended action");
}
GateOutcome gate_outcome_from(std::string_view s) {
  return reverse(kOutcomes, s, "gate outcome");
}
IssueCategory category_from(std::string_view s) {
  return reverse(kCategories, s, "issue category");
}
IssueStatus issue_status_from(std::string_view s) {
  return reverse(kIssueStatus, s, "issue status");
}
TaskScale scale_from(std::string_view s) {
  return reverse(kScales, s, "task scale");
}
TaskStatus task_status_from(std::string_view s) {
  return reverse(kTaskStatus, s, "task status");
}
SpendOutcome spend_outcome_from(std::string_view s) {
  return reverse(kSpendOutcomes, s, "spend outcome");
}
DemandedAction demanded_action_from(std::string_view s) {
  return reverse(kDemanded, s, "demanded action");
}
UpdateKind update_kind_from(std::string_view s) {
  return reverse(kUpdateKinds, s, "update kind");
}
ProtectedRule protected_rule_from(std::string_view s) {
  return reverse(kProtRules, s, "protected rule");
}
ProtectedCheck protected_check_from(std::string_view s) {
  return reverse(kProtChecks, s, "protected check");
}
ConversionKind conversion_kind_from(std::string_view s) {
  return reverse(kConvKinds, s, "conversion kind");
}
HarnessFunction hf_from(std::string_view s) {
  return reverse(kHf, s, "harness function");
}
InjectionKind injection_kind_from(std::string_view s) {
  return reverse(kInjections, s, "injection kind");
}

std::optional<IssueCategory> category_try_from(std::string_view s) {
  for (const auto& [e, name] : kCategories)
    if (s == name) return e;
  return std::nullopt;
}

StageGroup stage_group(StageId s) {
  switch (s) {
  case StageId::ideation:
  case StageId::planning:
  case StageId::reflection:
    return StageGroup::harness;
  case StageId::experiment:
    return StageGroup::experiment;
  case StageId::validation:
  case StageId::quality_gate:
    return StageGroup::validation;
  case StageId::review:
    return StageGroup::review;
  case StageId::writing:
    return StageGroup::writing;
  }
  throw std::invalid_argument("bad stage");
}

std::vector<StageId> all_stages() {
  std::vector<StageId> out;
  for (const auto& [e, s] : kStages) out.push_back(e);
  return out;
}

std::vector<IssueCategory> all_categories() {
  std::vector<IssueCategory> out;
  for (const auto& [e, s] : kCategories) out.push_back(e);
  return out;
}

std::vector<RoleId> all_roles() {
  std::vector<RoleId> out;
  for (const auto& [e, s] : kRoles) out.push_back(e);
  return out;
}

std::vector<ValidatorId> all_validators() {
  std::vector<ValidatorId> out;
  for (const auto& [e, s] : kValidators) out.push_back(e);
  return out;
}

} // namespace harness
