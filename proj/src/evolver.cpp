#include "harness/evolver.hpp"

#include <algorithm>

namespace harness {

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

json HarnessUpdate::to_json() const {
  json j{{"schema_version", kSchemaVersion},
         {"id", id},
         {"kind", to_string(kind)},
         {"trigger_issues", trigger_issues},
         {"payload", payload},
         {"protected_check", to_string(protected_check)},
         {"rolled_back", rolled_back}};
  if (applied_at != kUnsetSeq) j["applied_at"] = applied_at;
  return j;
}

HarnessUpdate HarnessUpdate::from_json(const json& j) {
  HarnessUpdate u;
  u.id = j.at("id").get<std::string>();
  u.kind = update_kind_from(j.at("kind").get<std::string>());
  u.trigger_issues = j.at("trigger_issues").get<std::vector<std::string>>();
  u.payload = j.value("payload", json::object());
  u.protected_check =
      protected_check_from(j.at("protected_check").get<std::string>());
  u.applied_at = j.value("applied_at", kUnsetSeq);
  u.rolled_back = j.value("rolled_back", false);
  return u;
}

json ProtectedConstraint::to_json() const {
  return json{{"id", id}, {"protects", protects}, {"rule", to_string(rule)}};
}

ProtectedConstraint ProtectedConstraint::from_json(const json& j) {
  ProtectedConstraint p;
  p.id = j.at("id").get<std::string>();
  p.protects = j.at("protects").get<std::string>();
  p.rule = protected_rule_from(j.at("rule").get<std::string>());
  return p;
}

void write_default_protected(const Workspace& ws) {
  json arr = json::array();
  arr.push_back(ProtectedConstraint{"pc-000001", "gate:missing-review",
                                    ProtectedRule::no_weaken}
                    .to_json());
  arr.push_back(ProtectedConstraint{"pc-000002",
                                    "file:registry/protected.conf",
                                    ProtectedRule::approval_required}
                    .to_json());
  write_json_file(ws.registry_dir() / "protected.conf",
                  json{{"schema_version", kSchemaVersion},
                       {"constraints", arr}});
}

std::vector<ProtectedConstraint> load_protected(const Workspace& ws) {
  std::vector<ProtectedConstraint> out;
  fs::path f = ws.registry_dir() / "protected.conf";
  if (!fs::exists(f)) return out;
  for (const auto& c : read_json_file(f).value("constraints", json::array()))
    out.push_back(ProtectedConstraint::from_json(c));
  return out;
}

// ---------------------------------------------------------------------------
// evolver
// ---------------------------------------------------------------------------

SelfEvolver::SelfEvolver(Workspace& ws, HarnessConfig& cfg, MemoryRouter& memory)
    : ws_(ws), cfg_(cfg), memory_(memory) {
  fs::path dir = ws_.registry_dir() / "harness-updates";
  if (!fs::exists(dir)) return;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files)
    updates_.push_back(HarnessUpdate::from_json(read_json_file(f)));
}

void SelfEvolver::persist(const HarnessUpdate& u) {
  fs::create_directories(ws_.registry_dir() / "harness-updates");
  write_json_file(ws_.registry_dir() / "harness-updates" / (u.id + ".json"),
                  u.to_json());
}

HarnessUpdate& SelfEvolver::get(const std::string& id) {
  for (auto& u : updates_)
    if (u.id == id) return u;
  throw UsageError("no such harness update: " + id);
}

std::optional<HarnessUpdate> SelfEvolver::find(const std::string& id) const {
  for (const auto& u : updates_)
    if (u.id == id) return u;
  return std::nullopt;
}

std::vector<HarnessUpdate> SelfEvolver::evaluate_recurrence() {
  std::vector<HarnessUpdate> proposals;
  for (const auto& issue : memory_.issues()) {
    if (issue.frequency < cfg_.evolution.recurrence_threshold) continue;
    bool cited = false;
    for (const auto& u : updates_)
      if (std::find(u.trigger_issues.begin(), u.trigger_issues.end(),
                    issue.id) != u.trigger_issues.end() &&
          !u.rolled_back)
        cited = true;
    if (cited) continue;

    HarnessUpdate u;
    u.kind = cfg_.evolution.kind_for(issue.failure_class);
    u.trigger_issues = {issue.id};
    switch (u.kind) {
    case UpdateKind::gate:
      u.payload = json{{"action", "enable-validator"},
                       {"validator", issue.failure_class}};
      break;
    case UpdateKind::repair_task:
      u.payload = json{{"action", "repair-task"},
                       {"failure_class", issue.failure_class}};
      break;
    case UpdateKind::scheduler_policy:
      u.payload = json{{"action", "cheap-check-first"},
                       {"failure_class", issue.failure_class}};
      break;
    case UpdateKind::artifact_contract:
      u.payload = json{{"action", "require-outputs"},
                       {"failure_class", issue.failure_class}};
      break;
    default:
      u.payload = json{{"action", "overlay"},
                       {"failure_class", issue.failure_class},
                       {"roles", [&] {
                          json roles = json::array();
                          for (auto r : issue.affected_roles)
                            roles.push_back(to_string(r));
                          return roles;
                        }()}};
      break;
    }
    proposals.push_back(std::move(u));
  }
  return proposals;
}

HarnessUpdate SelfEvolver::propose(HarnessUpdate update) {
  if (update.trigger_issues.empty())
    throw UsageError("harness update must cite at least one trigger issue");
  if (update.id.empty()) update.id = ws_.next_record_id("u");
  updates_.push_back(update);
  persist(update);
  return update;
}

ProtectedCheck SelfEvolver::check_protected(const HarnessUpdate& u) const {
  const std::string action = u.payload.value("action", std::string{});
  const bool weakening =
      action == "disable-validator" || action == "remove-gate";
  if (!weakening) return ProtectedCheck::passed;
  const std::string target = u.payload.value("validator", std::string{});
  for (const auto& pc : load_protected(ws_)) {
    if (pc.protects != "gate:" + target) continue;
    return ProtectedCheck::requires_approval;
  }
  return ProtectedCheck::passed;
}

void SelfEvolver::snapshot_config(const std::string& update_id) {
  fs::path snap = ws_.config_dir() / "snapshots" / update_id;
  fs::create_directories(snap);
  for (const auto& e : fs::directory_iterator(ws_.config_dir()))
    if (e.is_regular_file())
      fs::copy_file(e.path(), snap / e.path().filename(),
                    fs::copy_options::overwrite_existing);
}

void SelfEvolver::restore_config(const std::string& update_id) {
  fs::path snap = ws_.config_dir() / "snapshots" / update_id;
  if (!fs::exists(snap))
    throw UsageError("no config snapshot for " + update_id);
  for (const auto& e : fs::directory_iterator(snap))
    if (e.is_regular_file())
      fs::copy_file(e.path(), ws_.config_dir() / e.path().filename(),
                    fs::copy_options::overwrite_existing);
}

HarnessUpdate SelfEvolver::apply_update(const std::string& update_id,
                                        bool approval_flag) {
  HarnessUpdate& u = get(update_id);
  if (u.applied()) throw UsageError("update already applied: " + update_id);

  ProtectedCheck check = check_protected(u);
  if (check == ProtectedCheck::requires_approval && !approval_flag) {
    u.protected_check = ProtectedCheck::rejected;
    persist(u);
    EventRecord ev;
    ev.iteration = ws_.current_iteration();
    ev.stage = ws_.current_stage();
    ev.kind = EventKind::task_update;
    ev.payload = json{{"action", "update-rejected"},
                      {"update", u.id},
                      {"reason", "protected constraint requires approval"}};
    ev.hf = {HarnessFunction::h7};
    ws_.append_event(std::move(ev));
    throw UsageError("protected constraint: update " + u.id +
                     " weakens a protected gate and has no approval");
  }
  u.protected_check = check == ProtectedCheck::requires_approval
                          ? ProtectedCheck::requires_approval
                          : ProtectedCheck::passed;

  snapshot_config(u.id);

  const std::string action = u.payload.value("action", std::string{});
  if (u.kind == UpdateKind::gate) {
    std::string name = u.payload.value("validator", std::string{});
    ValidatorId v = validator_from(name);
    auto& enabled = cfg_.gate.enabled;
    if (action == "enable-validator") {
      if (std::find(enabled.begin(), enabled.end(), v) == enabled.end())
        enabled.push_back(v);
    } else if (action == "disable-validator") {
      enabled.erase(std::remove(enabled.begin(), enabled.end(), v),
                    enabled.end());
    }
    cfg_.save_section(ws_, "gate");
  }
  if (u.kind == UpdateKind::scheduler_policy) {
    cfg_.scheduler.cheap_check_first = true;
    cfg_.save_section(ws_, "scheduler");
  }

  EventRecord ev;
  ev.iteration = ws_.current_iteration();
  ev.stage = ws_.current_stage();
  ev.kind = EventKind::harness_update;
  ev.payload = json{{"update", u.id},
                    {"kind", to_string(u.kind)},
                    {"payload", u.payload},
                    {"approved", approval_flag}};
  for (const auto& i : u.trigger_issues) ev.cause_refs.push_back("issue:" + i);
  ev.hf = {HarnessFunction::h7};
  std::uint64_t seq = ws_.append_event(std::move(ev));
  u.applied_at = seq;
  persist(u);
  return u;
}

HarnessUpdate SelfEvolver::rollback_update(const std::string& update_id) {
  HarnessUpdate& u = get(update_id);
  if (!u.applied()) throw UsageError("update not applied: " + update_id);
  restore_config(u.id);
  cfg_ = HarnessConfig::load(ws_);
  u.rolled_back = true;
  persist(u);
  EventRecord ev;
  ev.iteration = ws_.current_iteration();
  ev.stage = ws_.current_stage();
  ev.kind = EventKind::task_update;
  ev.payload = json{{"action", "update-rollback"}, {"update", u.id}};
  ev.hf = {HarnessFunction::h7};
  ws_.append_event(std::move(ev));
  return u;
}

std::optional<TaskRecord>
SelfEvolver::generate_repair_task(const ValidatorFinding& finding,
                                  int target_iteration,
                                  Orchestrator& orchestrator) {
  if (finding.recommended_action != RecommendedAction::repair_task)
    return std::nullopt; // blocks and downgrades are the gate's business

  static const std::map<ValidatorId, const char*> kQuestions = {
      {ValidatorId::duplicate_results,
       "verify single-source analysis and deduplicate result files"},
      {ValidatorId::ci_inversion,
       "repair interval statistics and re-verify source-to-paper consistency"},
      {ValidatorId::stale_number,
       "run source-to-paper validation and refresh stale headline numbers"},
      {ValidatorId::manifest_mismatch,
       "align claim-declared configuration with the run manifest"},
      {ValidatorId::unsupported_statistic,
       "verify every claimed statistic against a stored source artifact"},
  };
  TaskRecord task;
  task.id = "repair-" + finding.id;
  auto q = kQuestions.find(finding.validator);
  task.question = q == kQuestions.end()
                      ? "repair " + finding.failure_class
                      : q->second;
  task.expected_evidence = "validation artifact covering " +
                           finding.failure_class;
  task.outputs = {ArtifactKind::result_table};
  task.scale = TaskScale::pilot;
  task.budget_units = 1;
  task.cause_refs.push_back("finding:" + finding.id);
  for (const auto& a : finding.offending_artifacts)
    task.cause_refs.push_back("artifact:" + a);

  // Writing-flavored tasks in the target plan must wait for the repair.
  std::vector<PlanMutation> mutations;
  PlanMutation add;
  add.op = PlanMutation::Op::add;
  add.task = task;
  mutations.push_back(add);
  for (const auto& t : orchestrator.plan(target_iteration)) {
    std::string text = t.id + " " + t.question;
    if (text.find("writ") == std::string::npos &&
        text.find("draft") == std::string::npos &&
        text.find("paper") == std::string::npos)
      continue;
    PlanMutation dep;
    dep.op = PlanMutation::Op::add_dependency;
    dep.task_id = t.id;
    dep.dep_id = task.id;
    mutations.push_back(dep);
  }
  orchestrator.mutate_plan(target_iteration, mutations, task.cause_refs);
  return task;
}

} // namespace harness
