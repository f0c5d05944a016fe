#include "harness/evidence.hpp"

#include <algorithm>
#include <cmath>

namespace harness {

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

json EvidenceEdge::to_json() const {
  return json{{"claim_id", claim_id},
              {"artifact_id", artifact_id},
              {"kind", to_string(kind)},
              {"seq", seq}};
}

EvidenceEdge EvidenceEdge::from_json(const json& j) {
  EvidenceEdge e;
  e.claim_id = j.at("claim_id").get<std::string>();
  e.artifact_id = j.at("artifact_id").get<std::string>();
  e.kind = edge_kind_from(j.at("kind").get<std::string>());
  e.seq = j.at("seq").get<std::uint64_t>();
  return e;
}

json HeadlineNumber::to_json() const {
  return json{{"name", name},
              {"value", value},
              {"source_artifact_id", source_artifact_id},
              {"tolerance", tolerance}};
}

HeadlineNumber HeadlineNumber::from_json(const json& j) {
  HeadlineNumber h;
  h.name = j.at("name").get<std::string>();
  h.value = j.at("value").get<double>();
  h.source_artifact_id = j.value("source_artifact_id", std::string{});
  h.tolerance = j.value("tolerance", 1e-9);
  return h;
}

json ScaleRequirement::to_json() const {
  return json{{"key", key}, {"min_value", min_value}};
}

ScaleRequirement ScaleRequirement::from_json(const json& j) {
  ScaleRequirement r;
  r.key = j.at("key").get<std::string>();
  r.min_value = j.at("min_value").get<double>();
  return r;
}

bool ClaimRecord::has_unresolved_contradiction() const {
  for (const auto& c : negative_edges) {
    if (c.kind != EdgeKind::contradicts) continue;
    bool superseded = false;
    for (const auto& v : evidence_edges)
      if (v.kind == EdgeKind::validates && v.seq > c.seq) superseded = true;
    if (!superseded) return true;
  }
  return false;
}

json ClaimRecord::to_json() const {
  json j = extra;
  j["schema_version"] = kSchemaVersion;
  j["id"] = id;
  j["statement"] = statement;
  j["maturity"] = to_string(maturity);
  j["scope_label"] = scope_label;
  j["validation_status"] = to_string(validation_status);
  json ev = json::array(), neg = json::array(), hn = json::array(),
       sr = json::array();
  for (const auto& e : evidence_edges) ev.push_back(e.to_json());
  for (const auto& e : negative_edges) neg.push_back(e.to_json());
  for (const auto& h : headline_numbers) hn.push_back(h.to_json());
  for (const auto& r : scale_requirements) sr.push_back(r.to_json());
  j["evidence_edges"] = ev;
  j["negative_edges"] = neg;
  j["headline_numbers"] = hn;
  j["scale_requirements"] = sr;
  j["declared_config"] = declared_config;
  return j;
}

ClaimRecord ClaimRecord::from_json(const json& j) {
  ClaimRecord c;
  c.id = j.at("id").get<std::string>();
  c.statement = j.at("statement").get<std::string>();
  c.maturity = maturity_from(j.at("maturity").get<std::string>());
  c.scope_label = j.value("scope_label", std::string{});
  c.validation_status =
      validation_status_from(j.at("validation_status").get<std::string>());
  for (const auto& e : j.value("evidence_edges", json::array()))
    c.evidence_edges.push_back(EvidenceEdge::from_json(e));
  for (const auto& e : j.value("negative_edges", json::array()))
    c.negative_edges.push_back(EvidenceEdge::from_json(e));
  for (const auto& h : j.value("headline_numbers", json::array()))
    c.headline_numbers.push_back(HeadlineNumber::from_json(h));
  for (const auto& r : j.value("scale_requirements", json::array()))
    c.scale_requirements.push_back(ScaleRequirement::from_json(r));
  if (j.contains("declared_config"))
    for (const auto& [k, v] : j["declared_config"].items())
      c.declared_config[k] = v;
  c.extra = j;
  for (const char* k :
       {"schema_version", "id", "statement", "maturity", "scope_label",
        "validation_status", "evidence_edges", "negative_edges",
        "headline_numbers", "scale_requirements", "declared_config"})
    c.extra.erase(k);
  return c;
}

json CheckOutcome::to_json() const {
  json j{{"outcome", to_string(outcome)},
         {"effective", to_string(effective)}};
  if (!reason.empty()) j["reason"] = reason;
  if (!forced_scope_label.empty()) j["forced_scope_label"] = forced_scope_label;
  return j;
}

// ---------------------------------------------------------------------------
// rule table
// ---------------------------------------------------------------------------

namespace {

MaturityLevel required_level(ClaimUsage usage) {
  switch (usage) {
  case ClaimUsage::pilot_mention:
    return MaturityLevel::pilot_signal;
  case ClaimUsage::general_claim:
    return MaturityLevel::paper_ready;
  case ClaimUsage::headline:
    return MaturityLevel::audited_claim;
  }
  throw UsageError("bad usage");
}

// Base requirement for holding a level, ignoring contradiction caps.
bool level_base_ok(MaturityLevel level, const ClaimRecord& claim,
                   const ArtifactResolver& resolve) {
  if (!maturity_at_least(level, MaturityLevel::analysis_ready)) return true;
  if (claim.validation_status != ValidationStatus::passed) return false;
  bool has_result_support = false;
  for (const auto& e : claim.evidence_edges)
    if (e.kind == EdgeKind::supports) {
      auto kind = resolve(e.artifact_id);
      if (kind && *kind == ArtifactKind::result_table) has_result_support = true;
    }
  if (!has_result_support) return false;
  if (level == MaturityLevel::audited_claim &&
      claim.has_unresolved_contradiction())
    return false;
  return true;
}

} // namespace

CheckOutcome check_claim_rule(const ClaimRecord& claim, ClaimUsage usage,
                              const ArtifactResolver& resolve) {
  CheckOutcome out;

  // Dangling evidence blocks outright: the trace cannot be reconstructed.
  for (const auto* edges : {&claim.evidence_edges, &claim.negative_edges})
    for (const auto& e : *edges)
      if (!resolve(e.artifact_id)) {
        out.outcome = GateOutcome::block;
        out.effective = claim.maturity;
        out.reason = "unresolvable evidence path: " + e.artifact_id;
        return out;
      }

  MaturityLevel effective = claim.maturity;
  if (claim.has_unresolved_contradiction() &&
      effective > MaturityLevel::execution_complete)
    effective = maturity_below(claim.maturity);
  while (effective > MaturityLevel::execution_complete &&
         !level_base_ok(effective, claim, resolve))
    effective = maturity_below(effective);

  out.effective = effective;
  MaturityLevel required = required_level(usage);
  if (!maturity_at_least(effective, required)) {
    out.outcome = GateOutcome::block;
    out.reason = "maturity " + to_string(effective) + " below required " +
                 to_string(required) + " for " + to_string(usage);
    return out;
  }
  out.outcome = effective == claim.maturity ? GateOutcome::allow
                                            : GateOutcome::downgrade;
  if (usage == ClaimUsage::pilot_mention)
    out.forced_scope_label = claim.scope_label.empty()
                                 ? "pilot estimate"
                                 : claim.scope_label;
  return out;
}

// ---------------------------------------------------------------------------
// registry
// ---------------------------------------------------------------------------

ClaimRegistry::ClaimRegistry(Workspace& ws) : ws_(ws) {
  const fs::path dir = ws_.registry_dir() / "claims";
  if (!fs::exists(dir)) return;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files)
    claims_.push_back(ClaimRecord::from_json(read_json_file(f)));
}

ArtifactResolver ClaimRegistry::resolver() const {
  return [this](const std::string& id) -> std::optional<ArtifactKind> {
    auto a = ws_.find_artifact(id);
    if (!a) return std::nullopt;
    return a->kind;
  };
}

void ClaimRegistry::persist(const ClaimRecord& c) {
  fs::create_directories(ws_.registry_dir() / "claims");
  write_json_file(ws_.registry_dir() / "claims" / (c.id + ".json"),
                  c.to_json());
}

ClaimRecord& ClaimRegistry::get(const std::string& id) {
  for (auto& c : claims_)
    if (c.id == id) return c;
  throw UsageError("no such claim: " + id);
}

std::optional<ClaimRecord> ClaimRegistry::find(const std::string& id) const {
  for (const auto& c : claims_)
    if (c.id == id) return c;
  return std::nullopt;
}

ClaimRecord ClaimRegistry::create(ClaimRecord draft) {
  if (draft.id.empty()) draft.id = ws_.next_record_id("c");
  if (find(draft.id)) throw UsageError("claim exists: " + draft.id);
  for (auto& e : draft.evidence_edges) {
    e.claim_id = draft.id;
    e.seq = ws_.tail_seq();
  }
  for (auto& e : draft.negative_edges) {
    e.claim_id = draft.id;
    e.seq = ws_.tail_seq();
  }
  claims_.push_back(draft);
  persist(draft);
  return draft;
}

CheckOutcome ClaimRegistry::check(const std::string& claim_id,
                                  ClaimUsage usage) const {
  auto c = find(claim_id);
  if (!c) throw UsageError("no such claim: " + claim_id);
  return check_claim_rule(*c, usage, resolver());
}

void ClaimRegistry::log_claim_event(const std::string& action,
                                    const ClaimRecord& c,
                                    const std::vector<std::string>& refs,
                                    const std::vector<std::string>& cause_refs) {
  EventRecord ev;
  ev.iteration = ws_.current_iteration();
  ev.stage = ws_.current_stage();
  ev.kind = EventKind::task_update;
  ev.payload = json{{"action", action},
                    {"claim", c.id},
                    {"maturity", to_string(c.maturity)}};
  ev.payload_refs = refs;
  ev.cause_refs = cause_refs;
  ev.hf = {HarnessFunction::h2};
  ws_.append_event(std::move(ev));
}

ClaimRecord ClaimRegistry::promote(const std::string& claim_id,
                                   MaturityLevel to,
                                   const std::vector<EvidenceEdge>& evidence) {
  ClaimRecord& c = get(claim_id);
  if (to != maturity_above(c.maturity) || to == c.maturity)
    throw UsageError("promotion must raise maturity exactly one level (" +
                     to_string(c.maturity) + " -> " + to_string(to) + ")");

  ClaimRecord trial = c;
  for (auto e : evidence) {
    e.claim_id = c.id;
    e.seq = ws_.tail_seq();
    if (e.kind == EdgeKind::contradicts || e.kind == EdgeKind::negative_result)
      trial.negative_edges.push_back(e);
    else
      trial.evidence_edges.push_back(e);
  }
  trial.maturity = to;
  auto resolve = resolver();
  for (const auto* edges : {&trial.evidence_edges, &trial.negative_edges})
    for (const auto& e : *edges)
      if (!resolve(e.artifact_id))
        throw UsageError("promotion evidence does not resolve: " +
                         e.artifact_id);
  if (!level_base_ok(to, trial, resolve))
    throw UsageError("evidence does not satisfy " + to_string(to) +
                     " (validation and result-table support required)");
  if (to == MaturityLevel::audited_claim && trial.has_unresolved_contradiction())
    throw UsageError("unresolved contradicting evidence bars audited-claim");

  // Full-scale boundary: a scoped pilot claim may not pass paper-ready
  // until every scale requirement is met by a linked manifest or table.
  if (maturity_at_least(to, MaturityLevel::paper_ready)) {
    for (const auto& req : trial.scale_requirements) {
      bool met = false;
      for (const auto& e : trial.evidence_edges) {
        if (e.kind != EdgeKind::supports && e.kind != EdgeKind::validates)
          continue;
        auto a = ws_.find_artifact(e.artifact_id);
        if (!a) continue;
        try {
          json content = read_json_file(ws_.artifact_file(*a));
          if (content.contains(req.key) &&
              content[req.key].is_number() &&
              content[req.key].get<double>() >= req.min_value)
            met = true;
        } catch (const IoError&) {
        }
      }
      if (!met)
        throw UsageError("scale requirement unmet: " + req.key +
                         " >= " + std::to_string(req.min_value));
    }
  }

  c = trial;
  persist(c);
  std::vector<std::string> refs;
  for (const auto& e : evidence) refs.push_back(e.artifact_id);
  log_claim_event("claim-promote", c, refs, {});
  return c;
}

ClaimRecord ClaimRegistry::demote(const std::string& claim_id, MaturityLevel to,
                                  const std::vector<std::string>& cause_refs) {
  ClaimRecord& c = get(claim_id);
  if (maturity_at_least(to, c.maturity))
    throw UsageError("demotion must lower maturity");
  c.maturity = to;
  persist(c);
  log_claim_event("claim-demote", c, {}, cause_refs);
  return c;
}

EvidenceEdge ClaimRegistry::add_edge(const std::string& claim_id,
                                     const std::string& artifact_id,
                                     EdgeKind kind) {
  ClaimRecord& c = get(claim_id);
  if (!ws_.find_artifact(artifact_id))
    throw UsageError("edge artifact does not resolve: " + artifact_id);
  EvidenceEdge e{claim_id, artifact_id, kind, ws_.tail_seq()};
  if (kind == EdgeKind::contradicts || kind == EdgeKind::negative_result)
    c.negative_edges.push_back(e);
  else
    c.evidence_edges.push_back(e);
  persist(c);
  return e;
}

void ClaimRegistry::set_validation(const std::string& claim_id,
                                   ValidationStatus status,
                                   const std::string& validation_artifact_id) {
  ClaimRecord& c = get(claim_id);
  c.validation_status = status;
  if (!validation_artifact_id.empty())
    add_edge(claim_id, validation_artifact_id, EdgeKind::validates);
  else
    persist(c);
  if (status == ValidationStatus::failed &&
      c.maturity > MaturityLevel::pilot_signal) {
    // Failed re-validation demotes rather than silently keeping the label.
    c.maturity = MaturityLevel::pilot_signal;
    persist(c);
    log_claim_event("claim-demote", c,
                    validation_artifact_id.empty()
                        ? std::vector<std::string>{}
                        : std::vector<std::string>{validation_artifact_id},
                    {});
  }
}

std::vector<TraceEntry> ClaimRegistry::trace(const std::string& claim_id) const {
  auto c = find(claim_id);
  if (!c) throw UsageError("no such claim: " + claim_id);
  std::vector<TraceEntry> path;
  std::uint64_t last_validates = 0;
  bool any_validates = false;
  for (const auto& e : c->evidence_edges)
    if (e.kind == EdgeKind::validates) {
      any_validates = true;
      last_validates = std::max(last_validates, e.seq);
    }
  for (const auto* edges : {&c->evidence_edges, &c->negative_edges})
    for (const auto& e : *edges) {
      TraceEntry t{e.seq, e.kind, e.artifact_id, false};
      if (e.kind == EdgeKind::contradicts && any_validates &&
          last_validates > e.seq)
        t.superseded = true;
      path.push_back(t);
    }
  std::stable_sort(path.begin(), path.end(),
                   [](const TraceEntry& a, const TraceEntry& b) {
                     return a.seq < b.seq;
                   });
  return path;
}

std::vector<HeadlineViolation> ClaimRegistry::headline_violations() const {
  std::vector<HeadlineViolation> out;
  for (const auto& a : ws_.artifacts()) {
    if (a.kind != ArtifactKind::draft) continue;
    json content;
    try {
      content = read_json_file(ws_.artifact_file(a));
    } catch (const IoError&) {
      continue;
    }
    for (const auto& hn : content.value("headline_numbers", json::array())) {
      std::string claim_id = hn.value("claim_id", std::string{});
      auto c = find(claim_id);
      if (!c || c->maturity != MaturityLevel::audited_claim)
        out.push_back({a.id, claim_id, hn.value("name", std::string{})});
    }
  }
  return out;
}

bool ClaimRegistry::ladder_invariant_holds(const ClaimRecord& claim) const {
  auto resolve = resolver();
  if (!level_base_ok(claim.maturity, claim, resolve)) return false;
  if (claim.maturity == MaturityLevel::audited_claim &&
      claim.has_unresolved_contradiction())
    return false;
  return true;
}

} // namespace harness
