#pragma once

// Recurrence-triggered harness updates. An issue seen often enough
// proposes an update whose kind comes from the failure-class map; applying
// an update snapshots the config for byte-exact rollback and emits a
// harness-update event. Protected constraints make weakening or deleting
// integrity gates impossible without an explicit approval flag.

#include <optional>
#include <string>
#include <vector>

#include "harness/config.hpp"
#include "harness/gatekeeper.hpp"
#include "harness/ids.hpp"
#include "harness/memory.hpp"
#include "harness/orchestrator.hpp"
#include "harness/workspace.hpp"

namespace harness {

struct HarnessUpdate {
  std::string id;
  UpdateKind kind = UpdateKind::prompt_overlay;
  std::vector<std::string> trigger_issues; // non-empty
  json payload = json::object();
  ProtectedCheck protected_check = ProtectedCheck::passed;
  std::uint64_t applied_at = kUnsetSeq; // event seq once applied
  bool rolled_back = false;

  bool applied() const { return applied_at != kUnsetSeq && !rolled_back; }
  json to_json() const;
  static HarnessUpdate from_json(const json& j);
};

struct ProtectedConstraint {
  std::string id;
  std::string protects; // "gate:<validator>" | "file:<pattern>" | "config:<key>"
  ProtectedRule rule = ProtectedRule::no_weaken;

  json to_json() const;
  static ProtectedConstraint from_json(const json& j);
};

void write_default_protected(const Workspace& ws);
std::vector<ProtectedConstraint> load_protected(const Workspace& ws);

class SelfEvolver {
public:
  SelfEvolver(Workspace& ws, HarnessConfig& cfg, MemoryRouter& memory);

  // One proposal per issue at/above the recurrence threshold that no prior
  // update already cites.
  std::vector<HarnessUpdate> evaluate_recurrence();

  // Persists a proposal so apply/rollback can reference it by id.
  HarnessUpdate propose(HarnessUpdate update);

  // Protected gates cannot be weakened or deleted without approval; an
  // applied update rewrites the live config and logs a harness-update
  // event with the triggering issues as causes.
  HarnessUpdate apply_update(const std::string& update_id, bool approval_flag);

  // Restores the config snapshot taken at apply time, byte for byte.
  HarnessUpdate rollback_update(const std::string& update_id);

  // Repair task for a finding whose recommended action is repair-task;
  // installed into the target iteration's plan ahead of writing tasks.
  std::optional<TaskRecord> generate_repair_task(const ValidatorFinding& finding,
                                                 int target_iteration,
                                                 Orchestrator& orchestrator);

  const std::vector<HarnessUpdate>& updates() const { return updates_; }
  std::optional<HarnessUpdate> find(const std::string& id) const;

private:
  void persist(const HarnessUpdate& u);
  HarnessUpdate& get(const std::string& id);
  ProtectedCheck check_protected(const HarnessUpdate& u) const;
  void snapshot_config(const std::string& update_id);
  void restore_config(const std::string& update_id);

  Workspace& ws_;
  HarnessConfig& cfg_;
  MemoryRouter& memory_;
  std::vector<HarnessUpdate> updates_;
};

} // namespace harness
