#pragma once

// Routed research memory: reflection artifacts are normalized into issue
// records keyed by (category, failure class), recurrences bump frequency,
// and issues become role-specific lesson overlays with exponential decay.
// Issues that recur twice are promoted into the shared global store so a
// lesson learned in one workspace reaches the next.

#include <optional>
#include <string>
#include <vector>

#include "harness/config.hpp"
#include "harness/ids.hpp"
#include "harness/workspace.hpp"

namespace harness {

struct IssueRecord {
  std::string id;
  IssueCategory category = IssueCategory::system;
  Severity severity = Severity::minor;
  std::string failure_class;
  int frequency = 1;
  std::vector<RoleId> affected_roles;
  std::string suggested_action;
  std::vector<std::string> source_refs; // artifact ids
  IssueStatus status = IssueStatus::open;
  int first_iteration = 0;
  int last_iteration = 0;

  json to_json() const;
  static IssueRecord from_json(const json& j);
};

struct LessonOverlay {
  std::string id;
  RoleId role = RoleId::planner;
  std::string lesson;
  double relevance = 1.0; // at updated_iteration; decays per iteration
  double decay_halflife = 4.0;
  std::string reopen_criteria;
  std::vector<std::string> source_issues;
  int updated_iteration = 0;

  double decayed(int iteration) const;
  json to_json() const;
  static LessonOverlay from_json(const json& j);
};

class MemoryRouter {
public:
  MemoryRouter(Workspace& ws, const HarnessConfig& cfg);

  // One IssueRecord per issue entry in the reflection artifact; recurrence
  // merges by (category, failure class). An unknown category is coerced to
  // the closest known one and the coercion is logged.
  std::vector<IssueRecord> normalize(const ArtifactRecord& reflection);

  std::vector<LessonOverlay> route(const IssueRecord& issue);

  // Overlays above the relevance threshold, highest first.
  std::vector<LessonOverlay> overlays_for(RoleId role, int iteration) const;

  std::map<IssueCategory, int> digest() const;

  const std::vector<IssueRecord>& issues() const { return issues_; }
  std::optional<IssueRecord> find_issue(const std::string& id) const;
  // Marks the issue addressed (repair task completed).
  void close_issue(const std::string& id);

  // Pulls global issues this workspace has not seen and routes them.
  std::vector<IssueRecord> sync_global();

  fs::path global_dir() const;

private:
  IssueRecord* find_by_key(IssueCategory c, const std::string& failure_class);
  void persist_issue(const IssueRecord& i);
  void persist_overlay(const LessonOverlay& o);
  void write_global(const IssueRecord& i);
  IssueCategory coerce_category(const std::string& raw, bool& coerced) const;

  Workspace& ws_;
  const HarnessConfig& cfg_;
  std::vector<IssueRecord> issues_;
  std::vector<LessonOverlay> overlays_;
};

} // namespace harness
