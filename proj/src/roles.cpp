#include "harness/roles.hpp"

#include <algorithm>

namespace harness {

json Objection::to_json() const {
  return json{{"schema_version", kSchemaVersion},
              {"id", id},
              {"raised_by", to_string(raised_by)},
              {"target", target},
              {"severity", to_string(severity)},
              {"demanded_action", to_string(demanded_action)},
              {"resolution_ref", resolution_ref},
              {"iteration", iteration}};
}

Objection Objection::from_json(const json& j) {
  Objection o;
  o.id = j.at("id").get<std::string>();
  o.raised_by = role_from(j.at("raised_by").get<std::string>());
  o.target = j.at("target").get<std::string>();
  o.severity = severity_from(j.at("severity").get<std::string>());
  o.demanded_action =
      demanded_action_from(j.at("demanded_action").get<std::string>());
  o.resolution_ref = j.value("resolution_ref", std::string{});
  o.iteration = j.value("iteration", 0);
  return o;
}

RoleBus::RoleBus(Workspace& ws, const HarnessConfig& cfg,
                 ClaimRegistry& registry, Orchestrator& orchestrator,
                 ResourceGovernor& governor, MemoryRouter& memory)
    : ws_(ws), cfg_(cfg), registry_(registry), orchestrator_(orchestrator),
      governor_(governor), memory_(memory) {
  fs::path dir = ws_.registry_dir() / "objections";
  if (!fs::exists(dir)) return;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files)
    objections_.push_back(Objection::from_json(read_json_file(f)));
}

void RoleBus::persist(const Objection& o) {
  fs::create_directories(ws_.registry_dir() / "objections");
  write_json_file(ws_.registry_dir() / "objections" / (o.id + ".json"),
                  o.to_json());
}

void RoleBus::require(RoleId role, const std::string& action) const {
  if (!cfg_.authority.allowed(role, action))
    throw AuthorityError("authority matrix denies (" + to_string(role) + ", " +
                         action + ")");
}

int RoleBus::open_count(int iteration, Severity at_least) const {
  int n = 0;
  for (const auto& o : objections_)
    if (o.open() && o.iteration == iteration &&
        static_cast<int>(o.severity) <= static_cast<int>(at_least))
      ++n;
  return n;
}

Objection RoleBus::raise_objection(RoleId role, const std::string& target,
                                   Severity severity, DemandedAction demanded) {
  require(role, actions::raise_objection);
  Objection o;
  o.id = ws_.next_record_id("o");
  o.raised_by = role;
  o.target = target;
  o.severity = severity;
  o.demanded_action = demanded;
  o.iteration = ws_.current_iteration();
  objections_.push_back(o);
  persist(o);

  EventRecord ev;
  ev.iteration = o.iteration;
  ev.stage = ws_.current_stage();
  ev.kind = EventKind::task_update;
  ev.payload = json{{"action", "objection-raised"},
                    {"objection", o.id},
                    {"target", target},
                    {"severity", to_string(severity)},
                    {"demanded_action", to_string(demanded)}};
  ev.hf = {HarnessFunction::h5};
  ws_.append_event(std::move(ev));
  return o;
}

Objection RoleBus::resolve_objection(const std::string& objection_id,
                                     const std::string& via_ref) {
  auto it = std::find_if(objections_.begin(), objections_.end(),
                         [&](const Objection& o) { return o.id == objection_id; });
  if (it == objections_.end())
    throw UsageError("no such objection: " + objection_id);
  if (via_ref.empty())
    throw UsageError("objection cannot be closed without a resolution");

  // The resolution must point at something real.
  bool resolvable = false;
  if (via_ref.rfind("artifact:", 0) == 0)
    resolvable = ws_.find_artifact(via_ref.substr(9)).has_value();
  else if (via_ref.rfind("task:", 0) == 0) {
    std::string tid = via_ref.substr(5);
    for (int i = 0; i <= ws_.current_iteration() + 1 && !resolvable; ++i)
      for (const auto& t : orchestrator_.plan(i))
        if (t.id == tid) resolvable = true;
  } else if (via_ref.rfind("claim:", 0) == 0)
    resolvable = registry_.find(via_ref.substr(6)).has_value();
  else if (via_ref.rfind("event:", 0) == 0) {
    std::uint64_t seq = std::stoull(via_ref.substr(6));
    resolvable = seq <= ws_.tail_seq() && !ws_.events().empty();
  }
  if (!resolvable)
    throw UsageError("resolution reference does not resolve: " + via_ref);

  it->resolution_ref = via_ref;
  persist(*it);

  EventRecord ev;
  ev.iteration = ws_.current_iteration();
  ev.stage = ws_.current_stage();
  ev.kind = EventKind::task_update;
  ev.payload = json{{"action", "objection-resolved"},
                    {"objection", it->id},
                    {"via", via_ref}};
  ev.cause_refs = {"objection:" + it->id};
  ev.hf = {HarnessFunction::h5};
  ws_.append_event(std::move(ev));
  return *it;
}

// ---------------------------------------------------------------------------
// scripted actions
// ---------------------------------------------------------------------------

namespace {

EvidenceEdge edge_from_action(const json& e, const RefResolver& resolve) {
  EvidenceEdge edge;
  edge.artifact_id = resolve(e.at("artifact").get<std::string>());
  edge.kind = edge_kind_from(e.value("kind", std::string{"supports"}));
  return edge;
}

// Drafts must route every number through the claim registry.
void enforce_writer_draft_contract(const json& content) {
  if (content.contains("loose_numbers") && !content["loose_numbers"].empty())
    throw AuthorityError(
        "writer drafts may not carry numbers outside the claim registry");
  for (const auto& hn : content.value("headline_numbers", json::array()))
    if (hn.value("claim_id", std::string{}).empty())
      throw AuthorityError("writer headline number lacks a claim id");
}

} // namespace

InvokeResult RoleBus::execute_action(RoleId role, const json& action,
                                     const RefResolver& resolve) {
  InvokeResult result;
  const std::string type = action.at("type").get<std::string>();
  int iteration = ws_.current_iteration();
  // Script citations: "$art:<rel>" becomes a typed artifact ref; anything
  // already typed ("issue:", "finding:", ...) passes through.
  auto cite = [&](const std::string& s) {
    return s.rfind("$art:", 0) == 0 ? "artifact:" + resolve(s) : s;
  };

  if (type == "emit-artifact") {
    require(role, actions::emit_artifact);
    ArtifactKind kind = artifact_kind_from(action.at("kind").get<std::string>());
    json content = action.value("content", json::object());
    if ((role == RoleId::writer || role == RoleId::editor) &&
        kind == ArtifactKind::draft)
      enforce_writer_draft_contract(content);
    // Resolve "$art:" references inside headline sources.
    if (content.contains("headline_numbers"))
      for (auto& hn : content["headline_numbers"])
        if (hn.contains("source_artifact_id"))
          hn["source_artifact_id"] =
              resolve(hn["source_artifact_id"].get<std::string>());
    fs::path dir = ws_.ensure_iteration_dir(iteration);
    fs::path file = dir / action.at("rel_path").get<std::string>();
    fs::create_directories(file.parent_path());
    write_json_file(file, content);
    auto a = ws_.register_artifact(file, kind, to_string(role), iteration);
    result.artifact_ids.push_back(a.id);
    return result;
  }

  if (type == "create-claim") {
    require(role, actions::create_claim);
    json cj = action.at("claim");
    ClaimRecord c;
    c.id = cj.value("id", std::string{});
    c.statement = cj.value("statement", std::string{});
    c.maturity = maturity_from(cj.value("maturity",
                                        std::string{"execution-complete"}));
    c.scope_label = cj.value("scope_label", std::string{});
    c.validation_status = validation_status_from(
        cj.value("validation_status", std::string{"unvalidated"}));
    for (const auto& hn : cj.value("headline_numbers", json::array())) {
      HeadlineNumber h = HeadlineNumber::from_json(hn);
      if (!h.source_artifact_id.empty())
        h.source_artifact_id = resolve(h.source_artifact_id);
      c.headline_numbers.push_back(h);
    }
    json declared = cj.value("declared_config", json::object());
    for (const auto& [k, v] : declared.items()) c.declared_config[k] = v;
    for (const auto& r : cj.value("scale_requirements", json::array()))
      c.scale_requirements.push_back(ScaleRequirement::from_json(r));
    for (const auto& e : cj.value("edges", json::array())) {
      EvidenceEdge edge = edge_from_action(e, resolve);
      if (edge.kind == EdgeKind::contradicts ||
          edge.kind == EdgeKind::negative_result)
        c.negative_edges.push_back(edge);
      else
        c.evidence_edges.push_back(edge);
    }
    registry_.create(c);
    return result;
  }

  if (type == "add-edge") {
    require(role, actions::create_claim);
    registry_.add_edge(action.at("claim").get<std::string>(),
                       resolve(action.at("artifact").get<std::string>()),
                       edge_kind_from(action.value("kind",
                                                   std::string{"supports"})));
    return result;
  }

  if (type == "validate-claim") {
    require(role, actions::validate_claim);
    std::string artifact = action.value("artifact", std::string{});
    registry_.set_validation(
        action.at("claim").get<std::string>(),
        validation_status_from(action.at("status").get<std::string>()),
        artifact.empty() ? "" : resolve(artifact));
    return result;
  }

  if (type == "promote-claim") {
    require(role, actions::promote_claim);
    std::vector<EvidenceEdge> evidence;
    for (const auto& e : action.value("evidence", json::array()))
      evidence.push_back(edge_from_action(e, resolve));
    registry_.promote(action.at("claim").get<std::string>(),
                      maturity_from(action.at("to").get<std::string>()),
                      evidence);
    return result;
  }

  if (type == "downgrade-claim") {
    require(role, actions::downgrade_claim);
    std::vector<std::string> causes;
    for (const auto& c : action.value("cause", json::array()))
      causes.push_back(cite(c.get<std::string>()));
    registry_.demote(action.at("claim").get<std::string>(),
                     maturity_from(action.at("to").get<std::string>()), causes);
    return result;
  }

  if (type == "raise-objection") {
    auto o = raise_objection(
        role, action.at("target").get<std::string>(),
        severity_from(action.value("severity", std::string{"major"})),
        demanded_action_from(
            action.value("demanded_action", std::string{"validation-task"})));
    result.objection_ids.push_back(o.id);
    return result;
  }

  if (type == "resolve-objection") {
    require(role, actions::resolve_objection);
    resolve_objection(action.at("objection").get<std::string>(),
                      cite(action.at("via").get<std::string>()));
    return result;
  }

  if (type == "set-plan") {
    require(role, actions::mutate_plan);
    Plan plan;
    for (const auto& t : action.at("tasks")) plan.push_back(TaskRecord::from_json(t));
    orchestrator_.set_plan(action.value("iteration", iteration),
                           std::move(plan));
    return result;
  }

  if (type == "mutate-plan") {
    require(role, actions::mutate_plan);
    std::vector<PlanMutation> mutations;
    for (const auto& m : action.at("mutations")) {
      PlanMutation pm;
      std::string op = m.at("op").get<std::string>();
      if (op == "add") {
        pm.op = PlanMutation::Op::add;
        pm.task = TaskRecord::from_json(m.at("task"));
      } else if (op == "remove") {
        pm.op = PlanMutation::Op::remove;
        pm.task_id = m.at("task").get<std::string>();
      } else if (op == "reorder") {
        pm.op = PlanMutation::Op::reorder;
        pm.order = m.at("order").get<std::vector<std::string>>();
      } else if (op == "rescale") {
        pm.op = PlanMutation::Op::rescale;
        pm.task_id = m.at("task").get<std::string>();
        pm.new_scale = scale_from(m.at("scale").get<std::string>());
      } else if (op == "add-dependency") {
        pm.op = PlanMutation::Op::add_dependency;
        pm.task_id = m.at("task").get<std::string>();
        pm.dep_id = m.at("dep").get<std::string>();
      } else {
        throw UsageError("unknown plan mutation op: " + op);
      }
      mutations.push_back(std::move(pm));
    }
    std::vector<std::string> causes;
    for (const auto& c : action.value("cause", json::array()))
      causes.push_back(cite(c.get<std::string>()));
    orchestrator_.mutate_plan(action.value("iteration", iteration), mutations,
                              causes);
    return result;
  }

  if (type == "record-spend") {
    require(role, actions::record_spend);
    std::string task_id = action.at("task").get<std::string>();
    const TaskRecord* task = nullptr;
    for (int i = 0; i <= iteration && !task; ++i)
      for (const auto& t : orchestrator_.plan(i))
        if (t.id == task_id) task = &t;
    if (!task) throw UsageError("spend names unknown task " + task_id);
    std::vector<std::string> evidence;
    for (const auto& r : action.value("evidence", json::array()))
      evidence.push_back(cite(r.get<std::string>()));
    auto res = governor_.record_outcome(
        *task, action.at("units").get<double>(),
        spend_outcome_from(action.at("outcome").get<std::string>()), evidence);
    if (!res.accepted)
      orchestrator_.set_task_status(iteration, task_id, TaskStatus::failed);
    return result;
  }

  if (type == "set-task-status") {
    require(role, actions::mutate_plan);
    orchestrator_.set_task_status(
        action.value("iteration", iteration),
        action.at("task").get<std::string>(),
        task_status_from(action.at("status").get<std::string>()));
    return result;
  }

  if (type == "start-task") {
    require(role, actions::mutate_plan);
    orchestrator_.start_task(action.value("iteration", iteration),
                             action.at("task").get<std::string>());
    return result;
  }

  if (type == "scoped-allow") {
    require(role, actions::scoped_allow);
    EventRecord ev;
    ev.iteration = iteration;
    ev.stage = ws_.current_stage();
    ev.kind = EventKind::gate_decision;
    ev.payload = json{{"gate_id", "supervisor-advance:it" +
                                      std::to_string(iteration)},
                      {"outcome", "allow"},
                      {"scoped_risks", action.at("risks").get<std::string>()}};
    ev.hf = {HarnessFunction::h2, HarnessFunction::h5};
    ws_.append_event(std::move(ev));
    return result;
  }

  if (type == "add-task-if-overlay") {
    require(role, actions::mutate_plan);
    std::string needle = action.at("contains").get<std::string>();
    auto overlays = memory_.overlays_for(role, iteration);
    const LessonOverlay* hit = nullptr;
    for (const auto& o : overlays)
      if (o.lesson.find(needle) != std::string::npos) hit = &o;
    if (!hit) return result;
    PlanMutation pm;
    pm.op = PlanMutation::Op::add;
    pm.task = TaskRecord::from_json(action.at("task"));
    std::vector<std::string> causes;
    for (const auto& src : hit->source_issues)
      causes.push_back("issue:" + src);
    orchestrator_.mutate_plan(action.value("iteration", iteration), {pm},
                              causes);
    return result;
  }

  throw UsageError("unknown scripted action type: " + type);
}

} // namespace harness
