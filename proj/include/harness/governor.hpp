#pragma once

// Budget accounting and dependency-layered scheduling. Budget units are
// dimensionless; scenarios map them to minutes. A wasteful spend on a task
// that declared a cheap proxy registers a sanity check guarding similar
// tasks, and every later schedule places the check in an earlier layer
// than whatever it guards.

#include <optional>
#include <string>
#include <vector>

#include "harness/ids.hpp"
#include "harness/orchestrator.hpp"
#include "harness/workspace.hpp"

namespace harness {

struct SanityCheck {
  std::string id;
  std::string guard_keyword;
  TaskScale guard_scale = TaskScale::full;
  double cost_units = 0;
  std::string origin_spend; // "event:<seq>" of the triggering spend

  bool guards(const TaskRecord& t) const;
  json to_json() const;
  static SanityCheck from_json(const json& j);
};

struct Spend {
  std::string task_id;
  double units = 0;
  SpendOutcome outcome = SpendOutcome::useful;
  std::uint64_t seq = 0;

  json to_json() const;
  static Spend from_json(const json& j);
};

struct BudgetLedger {
  double total_units = 0;
  std::vector<Spend> spends;
  std::vector<SanityCheck> sanity_checks;

  double spent() const;
  double remaining() const;
  json to_json() const;
  static BudgetLedger from_json(const json& j);
};

struct DeferredTask {
  std::string task_id;
  std::string reason;
};

struct ScheduleResult {
  std::vector<std::vector<std::string>> layers; // task and check ids
  std::vector<DeferredTask> deferred;

  std::optional<std::size_t> layer_of(const std::string& id) const;
};

struct SpendResult {
  bool accepted = false;
  std::string reason;
  std::optional<SanityCheck> registered_check;
};

class ResourceGovernor {
public:
  ResourceGovernor(Workspace& ws);

  void set_total(double units);
  const BudgetLedger& ledger() const { return ledger_; }

  // Pure function of (plan, ledger): dependency layers by longest path,
  // registered checks ahead of the tasks they guard, over-budget tasks
  // deferred (transitively).
  ScheduleResult schedule(const Plan& plan) const;

  // Appends the spend, emits a budget-spend event, and on a wasteful
  // outcome with a declared proxy registers a sanity check (idempotent per
  // guard pattern) with a harness-update event.
  SpendResult record_outcome(const TaskRecord& task, double units,
                             SpendOutcome outcome,
                             const std::vector<std::string>& evidence_refs = {});

private:
  void persist();

  Workspace& ws_;
  BudgetLedger ledger_;
};

} // namespace harness
