#include "harness/gatekeeper.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

namespace harness {

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

json ValidatorFinding::to_json() const {
  json j{{"validator", to_string(validator)},
         {"failure_class", failure_class},
         {"offending_artifacts", offending_artifacts},
         {"severity", to_string(severity)},
         {"recommended_action", to_string(recommended_action)}};
  if (!id.empty()) j["id"] = id;
  if (!detail.empty()) j["detail"] = detail;
  return j;
}

ValidatorFinding ValidatorFinding::from_json(const json& j) {
  ValidatorFinding f;
  f.id = j.value("id", std::string{});
  f.validator = validator_from(j.at("validator").get<std::string>());
  f.failure_class = j.at("failure_class").get<std::string>();
  f.offending_artifacts =
      j.at("offending_artifacts").get<std::vector<std::string>>();
  f.severity = severity_from(j.at("severity").get<std::string>());
  f.recommended_action =
      action_from(j.at("recommended_action").get<std::string>());
  f.detail = j.value("detail", std::string{});
  return f;
}

bool GateDecision::has_critical() const {
  return std::any_of(findings.begin(), findings.end(), [](const auto& f) {
    return f.severity == Severity::critical;
  });
}

json GateDecision::to_json() const {
  json fs = json::array();
  for (const auto& f : findings) fs.push_back(f.to_json());
  json j{{"gate_id", gate_id},
         {"outcome", to_string(outcome)},
         {"findings", fs}};
  if (rollback_target)
    j["rollback_target"] = json{{"iteration", rollback_target->first},
                                {"stage", to_string(rollback_target->second)}};
  if (!reason.empty()) j["reason"] = reason;
  return j;
}

GateDecision GateDecision::from_json(const json& j) {
  GateDecision d;
  d.gate_id = j.at("gate_id").get<std::string>();
  d.outcome = gate_outcome_from(j.at("outcome").get<std::string>());
  for (const auto& f : j.value("findings", json::array()))
    d.findings.push_back(ValidatorFinding::from_json(f));
  if (j.contains("rollback_target"))
    d.rollback_target = {j["rollback_target"].at("iteration").get<int>(),
                         stage_from(j["rollback_target"].at("stage")
                                        .get<std::string>())};
  d.reason = j.value("reason", std::string{});
  return d;
}

// ---------------------------------------------------------------------------
// validators
// ---------------------------------------------------------------------------

namespace {

json try_read_content(const Workspace& ws, const ArtifactRecord& a) {
  try {
    return read_json_file(ws.artifact_file(a));
  } catch (const IoError&) {
    return json();
  }
}

std::string condition_of(const Workspace& ws, const ArtifactRecord& a) {
  json content = try_read_content(ws, a);
  if (content.is_object() && content.contains("condition"))
    return content["condition"].get<std::string>();
  return fs::path(a.rel_path).parent_path().generic_string();
}

bool relative_mismatch(double stated, double canonical, double tolerance) {
  if (!std::isfinite(stated) || !std::isfinite(canonical)) return true;
  double denom = std::abs(canonical);
  double delta = std::abs(stated - canonical);
  if (denom == 0.0) return delta > tolerance;
  return delta / denom > tolerance;
}

} // namespace

std::vector<ValidatorFinding>
detect_duplicates(const Workspace& ws,
                  const std::vector<std::string>& result_ids) {
  std::map<std::string, std::vector<ArtifactRecord>> by_hash;
  for (const auto& id : result_ids) {
    auto a = ws.find_artifact(id);
    if (!a) throw UsageError("no such artifact: " + id);
    if (a->kind != ArtifactKind::result_table && a->kind != ArtifactKind::run_log)
      throw UsageError("duplicate detection expects result or log artifacts: " +
                       id);
    try {
      by_hash[ws.live_hash(*a)].push_back(*a);
    } catch (const IoError&) {
      // A vanished file cannot be byte-identical to anything; the dangling
      // reference surfaces through the statistics validator instead.
    }
  }
  std::vector<ValidatorFinding> out;
  for (const auto& [hash, group] : by_hash) {
    if (group.size() < 2) continue;
    std::set<std::string> conditions;
    for (const auto& a : group) conditions.insert(condition_of(ws, a));
    if (conditions.size() < 2) continue; // re-runs of one condition are legal
    ValidatorFinding f;
    f.validator = ValidatorId::duplicate_results;
    f.failure_class = "duplicate-results";
    for (const auto& a : group) f.offending_artifacts.push_back(a.id);
    std::sort(f.offending_artifacts.begin(), f.offending_artifacts.end());
    f.severity = Severity::critical;
    f.detail = std::to_string(group.size()) +
               " byte-identical results across conditions (" + hash.substr(0, 12) +
               ")";
    out.push_back(std::move(f));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.offending_artifacts < b.offending_artifacts;
  });
  return out;
}

std::vector<ValidatorFinding>
detect_ci_inversion(const std::vector<IntervalStat>& stats) {
  std::vector<ValidatorFinding> out;
  for (const auto& s : stats) {
    ValidatorFinding f;
    f.validator = ValidatorId::ci_inversion;
    f.severity = Severity::critical;
    if (!s.artifact_id.empty()) f.offending_artifacts.push_back(s.artifact_id);
    if (!std::isfinite(s.point) || !std::isfinite(s.lower) ||
        !std::isfinite(s.upper)) {
      f.failure_class = "non-finite statistic";
      f.detail = s.name + ": non-finite interval";
      out.push_back(std::move(f));
      continue;
    }
    if (s.lower <= s.point && s.point <= s.upper) continue;
    f.failure_class = "ci-inversion";
    f.detail = s.name + ": point " + std::to_string(s.point) +
               " outside [" + std::to_string(s.lower) + ", " +
               std::to_string(s.upper) + "]";
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<IntervalStat> intervals_of(const Workspace& ws,
                                       const ArtifactRecord& table) {
  std::vector<IntervalStat> out;
  json content = try_read_content(ws, table);
  if (!content.is_object() || !content.contains("intervals")) return out;
  for (const auto& iv : content["intervals"]) {
    IntervalStat s;
    s.name = iv.value("name", std::string{});
    s.point = iv.value("point", std::nan(""));
    s.lower = iv.value("lower", std::nan(""));
    s.upper = iv.value("upper", std::nan(""));
    s.artifact_id = table.id;
    out.push_back(s);
  }
  return out;
}

std::vector<ValidatorFinding>
detect_stale_numbers(const Workspace& ws, const ArtifactRecord& draft,
                     const ClaimRegistry& registry, double tolerance) {
  std::vector<ValidatorFinding> out;
  json content = try_read_content(ws, draft);
  if (!content.is_object()) return out;

  for (const auto& hn : content.value("headline_numbers", json::array())) {
    std::string claim_id = hn.value("claim_id", std::string{});
    std::string name = hn.value("name", std::string{});
    double stated = hn.value("value", std::nan(""));
    auto claim = registry.find(claim_id);
    if (!claim) {
      ValidatorFinding f;
      f.validator = ValidatorId::stale_number;
      f.failure_class = "untracked number";
      f.offending_artifacts = {draft.id};
      f.severity = Severity::minor;
      f.detail = name + " cites unknown claim " + claim_id;
      out.push_back(std::move(f));
      continue;
    }
    for (const auto& chn : claim->headline_numbers) {
      if (chn.name != name || chn.source_artifact_id.empty()) continue;
      auto src = ws.find_artifact(chn.source_artifact_id);
      if (!src) continue; // unsupported-statistic territory, not staleness
      json canon = try_read_content(ws, *src);
      if (!canon.is_object() || !canon.value("values", json::object()).contains(name))
        continue;
      double canonical = canon["values"][name].get<double>();
      double tol = chn.tolerance > 0 ? chn.tolerance : tolerance;
      if (relative_mismatch(stated, canonical, tol)) {
        ValidatorFinding f;
        f.validator = ValidatorId::stale_number;
        f.failure_class = "stale-number";
        f.offending_artifacts = {draft.id, src->id};
        f.severity = Severity::critical;
        f.detail = name + ": draft says " + std::to_string(stated) +
                   ", canonical source says " + std::to_string(canonical);
        out.push_back(std::move(f));
      }
    }
  }

  // Free-floating numerals that bypass the claim registry cannot be
  // verified; they are flagged, not blocked.
  for (const auto& loose : content.value("loose_numbers", json::array())) {
    ValidatorFinding f;
    f.validator = ValidatorId::stale_number;
    f.failure_class = "untracked number";
    f.offending_artifacts = {draft.id};
    f.severity = Severity::minor;
    f.detail = "unreferenced numeral " + loose.dump();
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<ValidatorFinding>
detect_manifest_mismatch(const Workspace& ws, const ClaimRecord& claim,
                         const ArtifactRecord& manifest) {
  std::vector<ValidatorFinding> out;
  json content = try_read_content(ws, manifest);
  if (!content.is_object()) return out;
  for (const auto& [key, declared] : claim.declared_config) {
    if (!content.contains(key)) continue;
    if (content[key] == declared) continue;
    ValidatorFinding f;
    f.validator = ValidatorId::manifest_mismatch;
    f.failure_class = "manifest-mismatch";
    f.offending_artifacts = {manifest.id};
    f.severity = Severity::critical;
    f.detail = "claim " + claim.id + " declares " + key + "=" +
               declared.dump() + ", manifest records " + content[key].dump();
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<ValidatorFinding>
detect_unsupported_statistics(const Workspace& ws,
                              const std::vector<ClaimRecord>& claims) {
  std::vector<ValidatorFinding> out;
  for (const auto& claim : claims) {
    for (const auto& hn : claim.headline_numbers) {
      ValidatorFinding f;
      f.validator = ValidatorId::unsupported_statistic;
      f.severity = Severity::critical;
      if (hn.source_artifact_id.empty()) {
        f.failure_class = "no source";
        f.offending_artifacts = {claim.evidence_edges.empty()
                                     ? claim.id
                                     : claim.evidence_edges.front().artifact_id};
        f.detail = claim.id + ": statistic " + hn.name + " has no source";
        out.push_back(std::move(f));
        continue;
      }
      auto src = ws.find_artifact(hn.source_artifact_id);
      if (!src || !fs::exists(ws.artifact_file(*src))) {
        f.failure_class = "unresolvable source";
        f.offending_artifacts = {hn.source_artifact_id};
        f.detail = claim.id + ": statistic " + hn.name + " cites " +
                   hn.source_artifact_id + " which cannot be read";
        out.push_back(std::move(f));
        continue;
      }
      json canon = try_read_content(ws, *src);
      if (!canon.is_object() ||
          !canon.value("values", json::object()).contains(hn.name))
        continue; // nothing stored to compare against
      double stored = canon["values"][hn.name].get<double>();
      if (relative_mismatch(hn.value, stored, hn.tolerance)) {
        f.failure_class = "unsupported-statistic";
        f.offending_artifacts = {src->id};
        f.detail = claim.id + ": claims " + hn.name + "=" +
                   std::to_string(hn.value) + ", stored value is " +
                   std::to_string(stored);
        out.push_back(std::move(f));
      }
    }
  }
  return out;
}

std::vector<ValidatorFinding>
check_pilot_boundary(const Workspace& ws, const ArtifactRecord& draft,
                     const ClaimRegistry& registry) {
  std::vector<ValidatorFinding> out;
  json content = try_read_content(ws, draft);
  if (!content.is_object()) return out;
  auto check_usage = [&](const std::string& claim_id,
                         const std::string& usage_s) {
    auto claim = registry.find(claim_id);
    if (!claim) return;
    CheckOutcome o = check_claim_rule(*claim, usage_from(usage_s),
                                      registry.resolver());
    if (o.outcome != GateOutcome::block) return;
    ValidatorFinding f;
    f.validator = ValidatorId::pilot_boundary;
    f.failure_class = "pilot-boundary";
    f.offending_artifacts = {draft.id};
    f.severity = Severity::critical;
    f.detail = claim_id + " used as " + usage_s + ": " + o.reason;
    out.push_back(std::move(f));
  };
  for (const auto& ref : content.value("claim_refs", json::array()))
    check_usage(ref.value("claim_id", std::string{}),
                ref.value("usage", std::string{"pilot-mention"}));
  // A headline number in prose is a headline use of its claim: nothing
  // below audited-claim may appear there.
  for (const auto& hn : content.value("headline_numbers", json::array()))
    check_usage(hn.value("claim_id", std::string{}), "headline");
  return out;
}

// ---------------------------------------------------------------------------
// gate
// ---------------------------------------------------------------------------

Gatekeeper::Gatekeeper(Workspace& ws, const HarnessConfig& cfg,
                       ClaimRegistry& registry)
    : ws_(ws), cfg_(cfg), registry_(registry) {}

GateDecision Gatekeeper::evaluate(int iteration,
                                  int open_major_objections) const {
  GateDecision d;
  d.gate_id = "quality-gate:it" + std::to_string(iteration);

  // Review-score precondition: any scored review for the iteration counts.
  std::optional<ArtifactRecord> review;
  bool has_score = false;
  for (const auto& a : ws_.artifacts()) {
    if (a.kind != ArtifactKind::review || a.iteration != iteration) continue;
    review = a;
    json content = try_read_content(ws_, a);
    if (content.is_object() && content.contains("score") &&
        content["score"].is_number())
      has_score = true;
  }
  if (!has_score) {
    d.outcome = GateOutcome::block;
    d.rollback_target = {{iteration, StageId::review}};
    d.reason = "no review score for iteration " + std::to_string(iteration);
    if (review && cfg_.gate.is_enabled(ValidatorId::missing_review)) {
      ValidatorFinding f;
      f.validator = ValidatorId::missing_review;
      f.failure_class = "missing-review";
      f.offending_artifacts = {review->id};
      f.severity = Severity::critical;
      f.recommended_action = RecommendedAction::block;
      f.detail = "review artifact carries no numeric score";
      d.findings.push_back(std::move(f));
    }
    return d;
  }

  std::vector<ValidatorFinding> findings;
  auto collect = [&](std::vector<ValidatorFinding> fs) {
    for (auto& f : fs) {
      f.recommended_action = cfg_.gate.action_for(f.validator);
      findings.push_back(std::move(f));
    }
  };

  std::vector<std::string> result_ids;
  std::vector<ArtifactRecord> drafts, manifests, tables;
  for (const auto& a : ws_.artifacts()) {
    if (a.iteration != iteration) continue;
    if (a.kind == ArtifactKind::result_table || a.kind == ArtifactKind::run_log)
      result_ids.push_back(a.id);
    if (a.kind == ArtifactKind::result_table) tables.push_back(a);
    if (a.kind == ArtifactKind::draft) drafts.push_back(a);
    if (a.kind == ArtifactKind::run_manifest) manifests.push_back(a);
  }

  if (cfg_.gate.is_enabled(ValidatorId::duplicate_results))
    collect(detect_duplicates(ws_, result_ids));

  if (cfg_.gate.is_enabled(ValidatorId::ci_inversion)) {
    std::vector<IntervalStat> stats;
    for (const auto& t : tables)
      for (auto& s : intervals_of(ws_, t)) stats.push_back(s);
    collect(detect_ci_inversion(stats));
  }

  if (cfg_.gate.is_enabled(ValidatorId::stale_number))
    for (const auto& draft : drafts)
      collect(detect_stale_numbers(ws_, draft, registry_,
                                   cfg_.gate.stale_tolerance));

  if (cfg_.gate.is_enabled(ValidatorId::manifest_mismatch)) {
    for (const auto& m : manifests) {
      for (const auto& claim : registry_.claims()) {
        bool cites = false;
        for (const auto& e : claim.evidence_edges)
          if (e.kind == EdgeKind::config && e.artifact_id == m.id) cites = true;
        if (cites) collect(detect_manifest_mismatch(ws_, claim, m));
      }
    }
  }

  if (cfg_.gate.is_enabled(ValidatorId::unsupported_statistic)) {
    // Scope to claims the iteration's drafts actually consume.
    std::set<std::string> referenced;
    for (const auto& draft : drafts) {
      json content = try_read_content(ws_, draft);
      if (!content.is_object()) continue;
      for (const auto& r : content.value("claim_refs", json::array()))
        referenced.insert(r.value("claim_id", std::string{}));
      for (const auto& hn : content.value("headline_numbers", json::array()))
        referenced.insert(hn.value("claim_id", std::string{}));
    }
    std::vector<ClaimRecord> scoped;
    for (const auto& c : registry_.claims())
      if (referenced.count(c.id)) scoped.push_back(c);
    collect(detect_unsupported_statistics(ws_, scoped));
  }

  if (cfg_.gate.is_enabled(ValidatorId::pilot_boundary))
    for (const auto& draft : drafts)
      collect(check_pilot_boundary(ws_, draft, registry_));

  std::sort(findings.begin(), findings.end(),
            [](const ValidatorFinding& a, const ValidatorFinding& b) {
              if (a.validator != b.validator) return a.validator < b.validator;
              if (a.offending_artifacts != b.offending_artifacts)
                return a.offending_artifacts < b.offending_artifacts;
              return a.detail < b.detail;
            });
  d.findings = std::move(findings);

  bool any_block = false, any_strong = false;
  for (const auto& f : d.findings) {
    if (f.severity == Severity::critical &&
        f.recommended_action == RecommendedAction::block)
      any_block = true;
    if (f.severity != Severity::minor) any_strong = true;
  }
  if (any_block) {
    d.outcome = GateOutcome::block;
    d.reason = "critical finding requires a block";
  } else if (any_strong || open_major_objections > 0) {
    d.outcome = GateOutcome::downgrade;
    d.reason = open_major_objections > 0 && !any_strong
                   ? "open objections of major severity"
                   : "writing restricted until findings are repaired";
  } else {
    d.outcome = GateOutcome::allow;
  }
  return d;
}

GateDecision Gatekeeper::run_quality_gate(int iteration,
                                          int open_major_objections) {
  GateDecision d = evaluate(iteration, open_major_objections);
  for (auto& f : d.findings) {
    f.id = ws_.next_record_id("f");
    EventRecord ev;
    ev.iteration = iteration;
    ev.stage = ws_.current_stage();
    ev.kind = EventKind::validator_finding;
    ev.payload = f.to_json();
    ev.payload_refs = f.offending_artifacts;
    ev.hf = {HarnessFunction::h2};
    ws_.append_event(std::move(ev));
  }
  EventRecord ev;
  ev.iteration = iteration;
  ev.stage = ws_.current_stage();
  ev.kind = EventKind::gate_decision;
  ev.payload = d.to_json();
  ev.hf = d.rollback_target
              ? HfSet{HarnessFunction::h2, HarnessFunction::h7}
              : HfSet{HarnessFunction::h2};
  ws_.append_event(std::move(ev));
  return d;
}

std::string
render_findings_table(const std::vector<ValidatorFinding>& findings) {
  std::ostringstream out;
  out << "validator              severity  action       offending            detail\n";
  for (const auto& f : findings) {
    std::string arts;
    for (const auto& a : f.offending_artifacts)
      arts += (arts.empty() ? "" : ",") + a;
    char line[512];
    std::snprintf(line, sizeof line, "%-22s %-9s %-12s %-20s %s\n",
                  to_string(f.validator).c_str(), to_string(f.severity).c_str(),
                  to_string(f.recommended_action).c_str(), arts.c_str(),
                  f.detail.c_str());
    out << line;
  }
  return out.str();
}

} // namespace harness
