#pragma once

// Read-only forensics over a workspace: conversion events with latencies,
// stage-transition counts, review-to-action rows, and the recovered-failure
// registry. Linking is strictly citation-based — an update converts a
// signal only when its cause refs cite it — and anything unresolvable is
// reported as a broken trace instead of guessed.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "harness/ids.hpp"
#include "harness/json_io.hpp"
#include "harness/workspace.hpp"

namespace harness {

struct ConversionEvent {
  ConversionKind kind = ConversionKind::behavior;
  std::string signal_ref; // "finding:..", "issue:..", "objection:..", ...
  int signal_iteration = 0;
  std::vector<std::string> trace_path;
  std::string update_ref; // "event:<seq>"
  int update_iteration = 0;
  int latency = 0;
  HfSet harness_functions;

  json to_json() const;
};

struct ConversionSummary {
  int count = 0;
  int median_latency = 0; // lower median
  int max_latency = 0;
};

struct ConversionReport {
  std::vector<ConversionEvent> events;
  ConversionSummary summary;
  std::vector<std::string> broken_traces;
};

struct TransitionMatrix {
  std::map<std::pair<StageGroup, StageGroup>, int> counts;

  int at(StageGroup from, StageGroup to) const;
  int total() const;
  json to_json() const;
};

struct ReviewActionRow {
  int iteration = 0;
  std::string project;
  std::optional<double> score;
  std::optional<double> delta;
  std::string movement; // down | flat | up | no-prior
  std::optional<int> high_severity_issue_count;
  std::optional<int> focus_item_count;
  std::optional<std::map<std::string, int>> next_plan_task_mix;

  json to_json() const;
};

struct MovementAggregate {
  int rows = 0;
  double mean_delta = 0;
  double mean_high_severity = 0; // over rows with a parsed count
  double mean_focus_items = 0;   // over rows with a parsed count
  int visible_plans = 0;
  std::map<std::string, int> task_mix;
};

struct ReviewActionReport {
  std::vector<ReviewActionRow> rows;
  std::map<std::string, MovementAggregate> by_movement;
};

struct FailureRow {
  std::string finding_id;
  std::string failure_class;
  std::vector<std::string> signal_artifacts;
  std::string catch_mechanism; // validator id
  std::string later_update;    // "event:<seq>" or "unconverted"
  int latency = -1;

  json to_json() const;
};

// Fixed keyword table; one primary category per task.
std::string classify_task_category(const std::string& text);

// Movement threshold on the 10-point internal review scale.
inline constexpr double kReviewFlatThreshold = 0.25;

class ConversionAuditor {
public:
  explicit ConversionAuditor(const fs::path& root);

  ConversionReport extract_conversions() const;
  TransitionMatrix transition_matrix() const;
  ReviewActionReport review_to_action() const;
  std::vector<FailureRow> failure_registry() const;

  const Workspace& workspace() const { return ws_; }

private:
  Workspace ws_;
};

} // namespace harness
