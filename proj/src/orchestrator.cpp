#include "harness/orchestrator.hpp"

#include <algorithm>
#include <set>

namespace harness {

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

json StopCondition::to_json() const {
  return json{{"kind", kind}, {"params", params}};
}

StopCondition StopCondition::from_json(const json& j) {
  StopCondition c;
  c.kind = j.at("kind").get<std::string>();
  c.params = j.value("params", json::object());
  return c;
}

json ProxyCheck::to_json() const {
  return json{{"cost_units", cost_units},
              {"guard_keyword", guard_keyword},
              {"guard_scale", to_string(guard_scale)}};
}

ProxyCheck ProxyCheck::from_json(const json& j) {
  ProxyCheck p;
  p.cost_units = j.at("cost_units").get<double>();
  p.guard_keyword = j.at("guard_keyword").get<std::string>();
  p.guard_scale = scale_from(j.at("guard_scale").get<std::string>());
  return p;
}

json TaskRecord::to_json() const {
  json outs = json::array(), stops = json::array();
  for (auto k : outputs) outs.push_back(to_string(k));
  for (const auto& s : stop_conditions) stops.push_back(s.to_json());
  json j{{"id", id},
         {"question", question},
         {"expected_evidence", expected_evidence},
         {"dependencies", dependencies},
         {"outputs", outs},
         {"stop_conditions", stops},
         {"scale", to_string(scale)},
         {"status", to_string(status)},
         {"budget_units", budget_units}};
  if (proxy_check) j["proxy_check"] = proxy_check->to_json();
  if (!cause_refs.empty()) j["cause_refs"] = cause_refs;
  if (latest_gate) j["latest_gate"] = to_string(*latest_gate);
  return j;
}

TaskRecord TaskRecord::from_json(const json& j) {
  TaskRecord t;
  t.id = j.at("id").get<std::string>();
  t.question = j.value("question", std::string{});
  t.expected_evidence = j.value("expected_evidence", std::string{});
  t.dependencies = j.value("dependencies", std::vector<std::string>{});
  for (const auto& k : j.value("outputs", json::array()))
    t.outputs.push_back(artifact_kind_from(k.get<std::string>()));
  for (const auto& s : j.value("stop_conditions", json::array()))
    t.stop_conditions.push_back(StopCondition::from_json(s));
  t.scale = scale_from(j.value("scale", std::string{"pilot"}));
  t.status = task_status_from(j.value("status", std::string{"pending"}));
  t.budget_units = j.value("budget_units", 0.0);
  if (j.contains("proxy_check"))
    t.proxy_check = ProxyCheck::from_json(j["proxy_check"]);
  t.cause_refs = j.value("cause_refs", std::vector<std::string>{});
  if (j.contains("latest_gate"))
    t.latest_gate = gate_outcome_from(j["latest_gate"].get<std::string>());
  return t;
}

bool plan_is_acyclic(const Plan& plan) {
  std::map<std::string, std::vector<std::string>> deps;
  std::map<std::string, int> indegree;
  for (const auto& t : plan) indegree[t.id] = 0;
  for (const auto& t : plan)
    for (const auto& d : t.dependencies) {
      if (!indegree.count(d)) continue; // dangling deps checked elsewhere
      deps[d].push_back(t.id);
      ++indegree[t.id];
    }
  std::vector<std::string> ready;
  for (const auto& [id, n] : indegree)
    if (n == 0) ready.push_back(id);
  std::size_t seen = 0;
  while (!ready.empty()) {
    auto id = ready.back();
    ready.pop_back();
    ++seen;
    for (const auto& next : deps[id])
      if (--indegree[next] == 0) ready.push_back(next);
  }
  return seen == plan.size();
}

bool stop_condition_met(const StopCondition& c, double spent_units,
                        int failure_count,
                        const std::function<std::optional<MaturityLevel>(
                            const std::string&)>& claim_level) {
  if (c.kind == "max-budget")
    return spent_units >= c.params.value("units", 0.0);
  if (c.kind == "max-failures")
    return failure_count >= c.params.value("count", 0);
  if (c.kind == "evidence-threshold") {
    auto level = claim_level(c.params.value("claim", std::string{}));
    if (!level) return false;
    return maturity_at_least(
        *level, maturity_from(c.params.value("level", std::string{
                                                          "analysis-ready"})));
  }
  throw UsageError("unknown stop condition kind: " + c.kind);
}

// ---------------------------------------------------------------------------
// orchestrator
// ---------------------------------------------------------------------------

Orchestrator::Orchestrator(Workspace& ws, const HarnessConfig& cfg)
    : ws_(ws), cfg_(cfg) {
  // Recover persisted plans so a reopened workspace resumes where it was.
  if (!fs::exists(ws_.root() / "iterations")) return;
  for (const auto& a : ws_.artifacts()) {
    if (a.kind != ArtifactKind::plan) continue;
    json content;
    try {
      content = read_json_file(ws_.artifact_file(a));
    } catch (const IoError&) {
      continue;
    }
    int it = content.value("iteration", a.iteration);
    int version = content.value("version", 0);
    if (version < plan_versions_[it]) continue;
    Plan p;
    for (const auto& t : content.value("tasks", json::array()))
      p.push_back(TaskRecord::from_json(t));
    plans_[it] = std::move(p);
    plan_versions_[it] = version;
  }
}

int Orchestrator::stage_index(StageId s) const {
  auto stages = all_stages();
  auto it = std::find(stages.begin(), stages.end(), s);
  return static_cast<int>(it - stages.begin());
}

EventRecord Orchestrator::advance_stage(StageId next) {
  StageId from = ws_.current_stage();
  int iteration = ws_.current_iteration();
  if (!cfg_.stages.allows(from, next))
    throw UsageError("transition not permitted by stage policy: " +
                     to_string(from) + " -> " + to_string(next));

  if (cfg_.stages.guarded(from, next)) {
    if (!gate_hook_)
      throw UsageError("guarded transition without a gate hook: " +
                       to_string(from) + " -> " + to_string(next));
    GateDecision d = gate_hook_(iteration);
    if (d.outcome == GateOutcome::block) throw BlockedTransition(std::move(d));
  }

  EventRecord end;
  end.iteration = iteration;
  end.stage = from;
  end.kind = EventKind::stage_end;
  ws_.append_event(std::move(end));
  int next_iteration = iteration;
  if (from == cfg_.stages.iteration_close && next == cfg_.stages.iteration_open)
    ++next_iteration;
  ws_.ensure_iteration_dir(next_iteration);
  EventRecord start;
  start.iteration = next_iteration;
  start.stage = next;
  start.kind = EventKind::stage_start;
  std::uint64_t seq = ws_.append_event(start);
  start.seq = seq;
  return start;
}

EventRecord Orchestrator::rollback(int target_iteration, StageId target_stage,
                                   const GateDecision& cause) {
  if (cause.outcome != GateOutcome::block)
    throw UsageError("rollback requires a blocking gate decision");
  int it = ws_.current_iteration();
  int cur_idx = stage_index(ws_.current_stage());
  int tgt_idx = stage_index(target_stage);
  if (target_iteration > it ||
      (target_iteration == it && tgt_idx > cur_idx))
    throw UsageError("rollback target is ahead of the current position");

  bool noop = target_iteration == it && tgt_idx == cur_idx;
  EventRecord ev;
  ev.iteration = it;
  ev.stage = ws_.current_stage();
  ev.kind = EventKind::rollback;
  ev.payload = json{{"target_iteration", target_iteration},
                    {"target_stage", to_string(target_stage)},
                    {"gate_id", cause.gate_id},
                    {"noop", noop}};
  for (const auto& f : cause.findings)
    if (!f.id.empty()) ev.cause_refs.push_back("finding:" + f.id);
  ev.hf = {HarnessFunction::h2, HarnessFunction::h7};
  std::uint64_t seq = ws_.append_event(ev);
  ev.seq = seq;
  if (!noop) {
    EventRecord resume;
    resume.iteration = target_iteration;
    resume.stage = target_stage;
    resume.kind = EventKind::stage_start;
    resume.payload = json{{"resumed_by_rollback", true}};
    ws_.append_event(std::move(resume));
  }
  return ev;
}

// ---------------------------------------------------------------------------
// plans
// ---------------------------------------------------------------------------

const Plan& Orchestrator::plan(int iteration) const {
  static const Plan empty;
  auto it = plans_.find(iteration);
  return it == plans_.end() ? empty : it->second;
}

Plan& Orchestrator::plan_mut(int iteration) { return plans_[iteration]; }

void Orchestrator::persist_plan(int iteration,
                                const std::vector<std::string>& cause_refs,
                                const std::string& description) {
  int version = ++plan_versions_[iteration];
  fs::path dir = ws_.ensure_iteration_dir(iteration) / "plan";
  fs::create_directories(dir);

  json tasks = json::array();
  for (const auto& t : plans_[iteration]) tasks.push_back(t.to_json());
  char name[32];
  std::snprintf(name, sizeof name, "plan-v%03d.json", version);
  fs::path plan_file = dir / name;
  write_json_file(plan_file, json{{"schema_version", kSchemaVersion},
                                  {"iteration", iteration},
                                  {"version", version},
                                  {"tasks", tasks}});
  auto plan_artifact = ws_.register_artifact(plan_file, ArtifactKind::plan,
                                             "system", ws_.current_iteration());

  std::snprintf(name, sizeof name, "mutation-v%03d.json", version);
  fs::path mut_file = dir / name;
  write_json_file(mut_file, json{{"schema_version", kSchemaVersion},
                                 {"iteration", iteration},
                                 {"version", version},
                                 {"description", description},
                                 {"cause_refs", cause_refs}});
  auto mut_artifact = ws_.register_artifact(mut_file, ArtifactKind::action_plan,
                                            "system", ws_.current_iteration());

  EventRecord ev;
  ev.iteration = ws_.current_iteration();
  ev.stage = ws_.current_stage();
  ev.kind = EventKind::task_update;
  ev.payload = json{{"action", "plan-mutation"},
                    {"plan_iteration", iteration},
                    {"version", version},
                    {"description", description}};
  ev.payload_refs = {plan_artifact.id, mut_artifact.id};
  ev.cause_refs = cause_refs;
  ev.hf = {HarnessFunction::h1};
  ws_.append_event(std::move(ev));
}

Plan Orchestrator::set_plan(int iteration, Plan plan,
                            const std::vector<std::string>& cause_refs) {
  if (!plan_is_acyclic(plan))
    throw UsageError("plan dependency graph has a cycle");
  plans_[iteration] = std::move(plan);
  persist_plan(iteration, cause_refs, "initial plan");
  return plans_[iteration];
}

Plan Orchestrator::mutate_plan(int iteration,
                               const std::vector<PlanMutation>& mutations,
                               const std::vector<std::string>& cause_refs) {
  if (cause_refs.empty())
    throw UsageError("unattributed mutation: cause_refs must cite at least "
                     "one triggering artifact");
  Plan next = plan(iteration);
  std::string description;
  for (const auto& m : mutations) {
    switch (m.op) {
    case PlanMutation::Op::add: {
      next.push_back(m.task);
      description += "+" + m.task.id + " ";
      break;
    }
    case PlanMutation::Op::remove: {
      for (const auto& t : next)
        for (const auto& d : t.dependencies)
          if (d == m.task_id && t.id != m.task_id)
            throw UsageError("cannot remove " + m.task_id + ": " + t.id +
                             " depends on it");
      next.erase(std::remove_if(next.begin(), next.end(),
                                [&](const TaskRecord& t) {
                                  return t.id == m.task_id;
                                }),
                 next.end());
      description += "-" + m.task_id + " ";
      break;
    }
    case PlanMutation::Op::reorder: {
      if (m.order.size() != next.size())
        throw UsageError("reorder must list every task id");
      Plan reordered;
      for (const auto& id : m.order) {
        auto it = std::find_if(next.begin(), next.end(),
                               [&](const TaskRecord& t) { return t.id == id; });
        if (it == next.end()) throw UsageError("reorder names unknown task " + id);
        reordered.push_back(*it);
      }
      next = std::move(reordered);
      description += "reorder ";
      break;
    }
    case PlanMutation::Op::rescale: {
      auto it = std::find_if(next.begin(), next.end(),
                             [&](const TaskRecord& t) {
                               return t.id == m.task_id;
                             });
      if (it == next.end()) throw UsageError("rescale names unknown task " + m.task_id);
      it->scale = m.new_scale;
      description += m.task_id + "->" + to_string(m.new_scale) + " ";
      break;
    }
    case PlanMutation::Op::add_dependency: {
      auto it = std::find_if(next.begin(), next.end(),
                             [&](const TaskRecord& t) {
                               return t.id == m.task_id;
                             });
      if (it == next.end())
        throw UsageError("add_dependency names unknown task " + m.task_id);
      if (std::find(it->dependencies.begin(), it->dependencies.end(),
                    m.dep_id) == it->dependencies.end())
        it->dependencies.push_back(m.dep_id);
      description += m.task_id + "<-" + m.dep_id + " ";
      break;
    }
    }
  }
  if (!plan_is_acyclic(next))
    throw UsageError("mutation would introduce a dependency cycle");
  plans_[iteration] = std::move(next);
  persist_plan(iteration, cause_refs, description);
  return plans_[iteration];
}

// ---------------------------------------------------------------------------
// task status
// ---------------------------------------------------------------------------

void Orchestrator::start_task(int iteration, const std::string& task_id) {
  Plan& p = plan_mut(iteration);
  auto it = std::find_if(p.begin(), p.end(),
                         [&](const TaskRecord& t) { return t.id == task_id; });
  if (it == p.end()) throw UsageError("no such task: " + task_id);
  if (it->scale == TaskScale::full) {
    for (const auto& dep_id : it->dependencies) {
      auto dep = std::find_if(p.begin(), p.end(), [&](const TaskRecord& t) {
        return t.id == dep_id;
      });
      if (dep == p.end()) continue;
      if (dep->scale != TaskScale::pilot) continue;
      if (dep->status == TaskStatus::failed)
        throw UsageError("full-scale task " + task_id +
                         " blocked: pilot dependency " + dep_id + " failed");
      if (dep->latest_gate && *dep->latest_gate == GateOutcome::block)
        throw UsageError("full-scale task " + task_id +
                         " blocked: pilot dependency " + dep_id +
                         " is not ready to proceed");
    }
  }
  it->status = TaskStatus::running;
  EventRecord ev;
  ev.iteration = ws_.current_iteration();
  ev.stage = ws_.current_stage();
  ev.kind = EventKind::task_update;
  ev.payload = json{{"action", "task-status"},
                    {"task", task_id},
                    {"status", "running"}};
  ev.hf = {HarnessFunction::h1};
  ws_.append_event(std::move(ev));
}

void Orchestrator::set_task_status(int iteration, const std::string& task_id,
                                   TaskStatus status,
                                   const std::vector<std::string>& cause_refs) {
  Plan& p = plan_mut(iteration);
  auto it = std::find_if(p.begin(), p.end(),
                         [&](const TaskRecord& t) { return t.id == task_id; });
  if (it == p.end()) throw UsageError("no such task: " + task_id);
  it->status = status;
  EventRecord ev;
  ev.iteration = ws_.current_iteration();
  ev.stage = ws_.current_stage();
  ev.kind = EventKind::task_update;
  ev.payload = json{{"action", "task-status"},
                    {"task", task_id},
                    {"status", to_string(status)}};
  ev.cause_refs = cause_refs;
  ev.hf = {HarnessFunction::h1};
  ws_.append_event(std::move(ev));
}

void Orchestrator::record_pilot_gate(int iteration, const std::string& task_id,
                                     GateOutcome outcome) {
  Plan& p = plan_mut(iteration);
  auto it = std::find_if(p.begin(), p.end(),
                         [&](const TaskRecord& t) { return t.id == task_id; });
  if (it == p.end()) throw UsageError("no such task: " + task_id);
  it->latest_gate = outcome;
}

} // namespace harness
