#pragma once

// Iteration state machine and task plans.
//
// Stage transitions follow the config policy table; entering a guarded
// stage runs the quality gate first and a blocked gate raises
// BlockedTransition without moving. Every plan mutation must cite at
// least one triggering artifact, which is what keeps conversions
// recoverable from the log. Rollback never deletes artifacts.

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "harness/config.hpp"
#include "harness/gatekeeper.hpp"
#include "harness/ids.hpp"
#include "harness/workspace.hpp"

namespace harness {

struct StopCondition {
  std::string kind; // max-budget | max-failures | evidence-threshold
  json params = json::object();

  json to_json() const;
  static StopCondition from_json(const json& j);
};

// Declared cheap proxy for an expensive task; a wasteful spend turns this
// into a registered sanity check guarding similar tasks.
struct ProxyCheck {
  double cost_units = 0;
  std::string guard_keyword; // matches task question/id substring
  TaskScale guard_scale = TaskScale::full;

  json to_json() const;
  static ProxyCheck from_json(const json& j);
};

struct TaskRecord {
  std::string id;
  std::string question;
  std::string expected_evidence;
  std::vector<std::string> dependencies;
  std::vector<ArtifactKind> outputs;
  std::vector<StopCondition> stop_conditions;
  TaskScale scale = TaskScale::pilot;
  TaskStatus status = TaskStatus::pending;
  double budget_units = 0;
  std::optional<ProxyCheck> proxy_check;
  std::vector<std::string> cause_refs;       // citations for repair tasks
  std::optional<GateOutcome> latest_gate;    // pilot readiness marker

  json to_json() const;
  static TaskRecord from_json(const json& j);
};

using Plan = std::vector<TaskRecord>;

bool plan_is_acyclic(const Plan& plan);

struct PlanMutation {
  enum class Op { add, remove, reorder, rescale, add_dependency };
  Op op = Op::add;
  TaskRecord task;                  // add
  std::string task_id;              // remove / rescale / add_dependency
  TaskScale new_scale = TaskScale::pilot; // rescale
  std::vector<std::string> order;   // reorder: full id permutation
  std::string dep_id;               // add_dependency
};

class BlockedTransition : public std::runtime_error {
public:
  explicit BlockedTransition(GateDecision d)
      : std::runtime_error("transition blocked: " + d.reason),
        decision(std::move(d)) {}
  GateDecision decision;
};

// Evaluated at task-update time, not continuously.
bool stop_condition_met(const StopCondition& c, double spent_units,
                        int failure_count,
                        const std::function<std::optional<MaturityLevel>(
                            const std::string&)>& claim_level);

class Orchestrator {
public:
  using GateHook = std::function<GateDecision(int iteration)>;

  Orchestrator(Workspace& ws, const HarnessConfig& cfg);

  // Runs the quality gate when the policy guards this transition.
  EventRecord advance_stage(StageId next);

  void set_gate_hook(GateHook hook) { gate_hook_ = std::move(hook); }

  const Plan& plan(int iteration) const;
  // Initial plan for an iteration (planning stage).
  Plan set_plan(int iteration, Plan plan,
                const std::vector<std::string>& cause_refs = {});
  Plan mutate_plan(int iteration, const std::vector<PlanMutation>& mutations,
                   const std::vector<std::string>& cause_refs);

  EventRecord rollback(int target_iteration, StageId target_stage,
                       const GateDecision& cause);

  // Pilot/full boundary: a full task may not start while a pilot
  // dependency failed or its latest gate marked it not ready.
  void start_task(int iteration, const std::string& task_id);
  void set_task_status(int iteration, const std::string& task_id,
                       TaskStatus status,
                       const std::vector<std::string>& cause_refs = {});
  void record_pilot_gate(int iteration, const std::string& task_id,
                         GateOutcome outcome);

private:
  Plan& plan_mut(int iteration);
  void persist_plan(int iteration, const std::vector<std::string>& cause_refs,
                    const std::string& description);
  int stage_index(StageId s) const;

  Workspace& ws_;
  const HarnessConfig& cfg_;
  GateHook gate_hook_;
  std::map<int, Plan> plans_;
  std::map<int, int> plan_versions_;
};

} // namespace harness
