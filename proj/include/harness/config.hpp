#pragma once

// Live policy tables. Everything here is file-backed under <root>/config/
// so that harness self-evolution can change behavior by rewriting config,
// and so a rollback can restore the previous bytes exactly.

#include <map>
#include <string>
#include <vector>

#include "harness/ids.hpp"
#include "harness/json_io.hpp"
#include "harness/workspace.hpp"

namespace harness {

// Role actions gated by the authority matrix.
namespace actions {
inline constexpr const char* emit_artifact = "emit-artifact";
inline constexpr const char* create_claim = "create-claim";
inline constexpr const char* promote_claim = "promote-claim";
inline constexpr const char* downgrade_claim = "downgrade-claim";
inline constexpr const char* validate_claim = "validate-claim";
inline constexpr const char* raise_objection = "raise-objection";
inline constexpr const char* resolve_objection = "resolve-objection";
inline constexpr const char* mutate_plan = "mutate-plan";
inline constexpr const char* scoped_allow = "scoped-allow";
inline constexpr const char* record_spend = "record-spend";
inline constexpr const char* apply_harness_update = "apply-harness-update";
std::vector<std::string> all();
} // namespace actions

struct StagePolicy {
  std::map<StageId, std::vector<StageId>> transitions;
  // Transitions that require a passing quality gate, as "from->to" keys.
  std::vector<std::string> gate_guarded;
  // The transition that advances the iteration counter.
  StageId iteration_close = StageId::quality_gate;
  StageId iteration_open = StageId::ideation;

  bool allows(StageId from, StageId to) const;
  bool guarded(StageId from, StageId to) const;
  json to_json() const;
  static StagePolicy from_json(const json& j);
};

struct GateConfig {
  std::vector<ValidatorId> enabled;
  std::map<ValidatorId, RecommendedAction> action_map;
  double stale_tolerance = 1e-9;

  bool is_enabled(ValidatorId v) const;
  RecommendedAction action_for(ValidatorId v) const;
  json to_json() const;
  static GateConfig from_json(const json& j);
};

struct RoutingTable {
  std::map<IssueCategory, std::vector<RoleId>> routes;

  const std::vector<RoleId>& roles_for(IssueCategory c) const;
  // Every category must map to at least one role.
  void validate_total() const;
  json to_json() const;
  static RoutingTable from_json(const json& j);
};

struct AuthorityMatrix {
  std::map<RoleId, std::map<std::string, bool>> grants;

  bool allowed(RoleId role, const std::string& action) const;
  // Every (role, action) pair must have an explicit entry.
  void validate_total() const;
  json to_json() const;
  static AuthorityMatrix from_json(const json& j);
};

struct MemoryParams {
  double decay_halflife = 4.0;
  double relevance_threshold = 0.25;
  int global_min_frequency = 2;
  std::string global_dir; // empty: <root>/memory/global

  json to_json() const;
  static MemoryParams from_json(const json& j);
};

struct EvolutionConfig {
  int recurrence_threshold = 2;
  std::map<std::string, UpdateKind> kind_map; // failure_class -> update kind
  UpdateKind fallback = UpdateKind::prompt_overlay;

  UpdateKind kind_for(const std::string& failure_class) const;
  json to_json() const;
  static EvolutionConfig from_json(const json& j);
};

struct SchedulerConfig {
  bool cheap_check_first = true;

  json to_json() const;
  static SchedulerConfig from_json(const json& j);
};

struct HarnessConfig {
  StagePolicy stages;
  GateConfig gate;
  RoutingTable routing;
  AuthorityMatrix authority;
  MemoryParams memory;
  EvolutionConfig evolution;
  SchedulerConfig scheduler;

  static HarnessConfig defaults();
  static HarnessConfig load(const Workspace& ws);
  // Writes every section to <root>/config/; used at workspace init.
  void install(const Workspace& ws) const;
  void save_section(const Workspace& ws, const std::string& section) const;
  static std::vector<std::string> sections();
};

} // namespace harness
