#pragma once

// Role identities, the authority matrix, and objection routing. Scripted
// agents are pure data: each invocation executes the declared actions for
// (role, iteration, stage), and every action passes through the authority
// matrix first. A writer's draft may reference claim ids only; raw numbers
// that bypass the registry are an authority violation, not a style issue.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "harness/config.hpp"
#include "harness/evidence.hpp"
#include "harness/governor.hpp"
#include "harness/ids.hpp"
#include "harness/memory.hpp"
#include "harness/orchestrator.hpp"
#include "harness/workspace.hpp"

namespace harness {

struct Objection {
  std::string id;
  RoleId raised_by = RoleId::critic;
  std::string target; // claim or task id
  Severity severity = Severity::major;
  DemandedAction demanded_action = DemandedAction::validation_task;
  std::string resolution_ref; // empty while open
  int iteration = 0;

  bool open() const { return resolution_ref.empty(); }
  json to_json() const;
  static Objection from_json(const json& j);
};

// Resolves script references ("$art:<rel_path>") to artifact ids.
using RefResolver = std::function<std::string(const std::string&)>;

struct InvokeResult {
  std::vector<std::string> artifact_ids;
  std::vector<std::string> objection_ids;
};

class RoleBus {
public:
  RoleBus(Workspace& ws, const HarnessConfig& cfg, ClaimRegistry& registry,
          Orchestrator& orchestrator, ResourceGovernor& governor,
          MemoryRouter& memory);

  // Executes one scripted action; throws AuthorityError when the matrix
  // denies it. Returns ids of anything the action created.
  InvokeResult execute_action(RoleId role, const json& action,
                              const RefResolver& resolve);

  Objection raise_objection(RoleId role, const std::string& target,
                            Severity severity, DemandedAction demanded);
  // Closing requires a real resolution (task, gate decision, or claim
  // downgrade); anything else is objection theater and is rejected.
  Objection resolve_objection(const std::string& objection_id,
                              const std::string& via_ref);

  const std::vector<Objection>& objections() const { return objections_; }
  int open_count(int iteration, Severity at_least = Severity::major) const;

private:
  void persist(const Objection& o);
  void require(RoleId role, const std::string& action) const;

  Workspace& ws_;
  const HarnessConfig& cfg_;
  ClaimRegistry& registry_;
  Orchestrator& orchestrator_;
  ResourceGovernor& governor_;
  MemoryRouter& memory_;
  std::vector<Objection> objections_;
};

} // namespace harness
