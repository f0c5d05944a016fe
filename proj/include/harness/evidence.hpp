#pragma once

// Validated claim registry: maturity-labeled claims linked to artifacts.
//
// Ladder invariants enforced here:
//   - analysis-ready and above require a supports edge to a result-table
//     artifact and validation_status == passed;
//   - audited-claim additionally requires zero unresolved contradicting
//     edges (a contradicts edge is unresolved until a later validates edge
//     supersedes it);
//   - promotion moves exactly one level per call and is logged;
//   - a contradicts edge can never raise maturity.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "harness/ids.hpp"
#include "harness/json_io.hpp"
#include "harness/workspace.hpp"

namespace harness {

struct EvidenceEdge {
  std::string claim_id;
  std::string artifact_id;
  EdgeKind kind = EdgeKind::supports;
  std::uint64_t seq = 0; // log position when the edge was recorded

  json to_json() const;
  static EvidenceEdge from_json(const json& j);
};

struct HeadlineNumber {
  std::string name;
  double value = 0.0;
  std::string source_artifact_id; // empty: unsupported by construction
  double tolerance = 1e-9;        // relative

  json to_json() const;
  static HeadlineNumber from_json(const json& j);
};

// Threshold a claim must meet before it may be stated at full scale,
// checked against run-manifest content (e.g. n_samples >= 1319).
struct ScaleRequirement {
  std::string key;
  double min_value = 0.0;

  json to_json() const;
  static ScaleRequirement from_json(const json& j);
};

struct ClaimRecord {
  std::string id;
  std::string statement;
  MaturityLevel maturity = MaturityLevel::execution_complete;
  std::string scope_label;
  ValidationStatus validation_status = ValidationStatus::unvalidated;
  std::vector<EvidenceEdge> evidence_edges; // supports/validates/config/raw-log
  std::vector<EvidenceEdge> negative_edges; // contradicts/negative-result
  std::vector<HeadlineNumber> headline_numbers;
  std::map<std::string, json> declared_config; // claim-declared run settings
  std::vector<ScaleRequirement> scale_requirements;
  json extra = json::object();

  bool has_unresolved_contradiction() const;
  json to_json() const;
  static ClaimRecord from_json(const json& j);
};

struct CheckOutcome {
  GateOutcome outcome = GateOutcome::allow;
  MaturityLevel effective = MaturityLevel::execution_complete;
  std::string reason;
  std::string forced_scope_label; // set for allowed pilot mentions

  json to_json() const;
};

struct TraceEntry {
  std::uint64_t seq = 0;
  EdgeKind kind = EdgeKind::supports;
  std::string artifact_id;
  bool superseded = false; // contradicts edge answered by a later validates
};

struct HeadlineViolation {
  std::string draft_artifact_id;
  std::string claim_id;
  std::string name;
};

// Resolves an artifact id to its kind; nullopt marks a dangling reference.
using ArtifactResolver =
    std::function<std::optional<ArtifactKind>(const std::string&)>;

// The deterministic claim-check rule table. Usage requirements:
//   pilot-mention  -> pilot-signal or above (scope label forced into output)
//   general-claim  -> paper-ready or above
//   headline       -> audited-claim
// Unresolved contradicting edges cap the effective level one below the
// label; a level whose base invariant fails degrades further down the
// ladder. A dangling edge blocks outright.
CheckOutcome check_claim_rule(const ClaimRecord& claim, ClaimUsage usage,
                              const ArtifactResolver& resolve);

class ClaimRegistry {
public:
  explicit ClaimRegistry(Workspace& ws);

  ClaimRecord create(ClaimRecord draft); // assigns id when empty, persists
  std::optional<ClaimRecord> find(const std::string& id) const;
  const std::vector<ClaimRecord>& claims() const { return claims_; }

  CheckOutcome check(const std::string& claim_id, ClaimUsage usage) const;

  // One level per call; verifies the requested level's invariant over the
  // existing edges plus `evidence`, logs the promotion with its refs.
  ClaimRecord promote(const std::string& claim_id, MaturityLevel to,
                      const std::vector<EvidenceEdge>& evidence);
  ClaimRecord demote(const std::string& claim_id, MaturityLevel to,
                     const std::vector<std::string>& cause_refs);

  EvidenceEdge add_edge(const std::string& claim_id,
                        const std::string& artifact_id, EdgeKind kind);
  void set_validation(const std::string& claim_id, ValidationStatus status,
                      const std::string& validation_artifact_id = "");

  std::vector<TraceEntry> trace(const std::string& claim_id) const;

  // Drafts whose headline numbers cite claims below audited-claim.
  std::vector<HeadlineViolation> headline_violations() const;

  // True when the record satisfies the invariant of its labeled level.
  bool ladder_invariant_holds(const ClaimRecord& claim) const;

  ArtifactResolver resolver() const;

private:
  ClaimRecord& get(const std::string& id);
  void persist(const ClaimRecord& c);
  void log_claim_event(const std::string& action, const ClaimRecord& c,
                       const std::vector<std::string>& refs,
                       const std::vector<std::string>& cause_refs);

  Workspace& ws_;
  std::vector<ClaimRecord> claims_;
};

} // namespace harness
