#include "harness/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace harness {

// ---------------------------------------------------------------------------
// scenario parsing
// ---------------------------------------------------------------------------

json Injection::to_json() const {
  return json{{"at_iteration", at_iteration},
              {"kind", to_string(kind)},
              {"target", target},
              {"params", params}};
}

Injection Injection::from_json(const json& j) {
  Injection i;
  i.at_iteration = j.at("at_iteration").get<int>();
  i.kind = injection_kind_from(j.at("kind").get<std::string>());
  i.target = j.value("target", std::string{});
  i.params = j.value("params", json::object());
  return i;
}

void Scenario::validate() const {
  if (name.empty()) throw UsageError("scenario needs a name");
  if (iterations < 1) throw UsageError("scenario needs at least one iteration");
  for (const auto& inj : injections)
    if (inj.at_iteration < 0 || inj.at_iteration >= iterations)
      throw UsageError("injection at iteration " +
                       std::to_string(inj.at_iteration) +
                       " is outside the scenario range");
  for (const auto& [role, entries] : scripts)
    for (const auto& e : entries) {
      if (e.iteration < 0 || e.iteration >= iterations)
        throw UsageError("script entry for " + to_string(role) +
                         " names iteration " + std::to_string(e.iteration) +
                         " outside the scenario range");
      for (const auto& a : e.actions)
        if (!a.is_object() || !a.contains("type"))
          throw UsageError("script action without a type for " +
                           to_string(role));
    }
}

Scenario Scenario::from_json(const json& j) {
  Scenario s;
  s.name = j.value("name", std::string{});
  s.iterations = j.value("iterations", 1);
  s.budget_units = j.value("budget_units", 100.0);
  if (j.contains("flags")) {
    s.evolution = j["flags"].value("evolution", true);
    s.memory = j["flags"].value("memory", true);
  }
  if (j.contains("gate_validators")) {
    std::vector<ValidatorId> v;
    for (const auto& name : j["gate_validators"])
      v.push_back(validator_from(name.get<std::string>()));
    s.gate_validators = v;
  }
  s.global_memory_dir = j.value("global_memory_dir", std::string{});
  json roles = j.value("roles", json::object());
  for (const auto& [role_name, entries] : roles.items()) {
    RoleId role = role_from(role_name);
    for (const auto& e : entries) {
      ScriptEntry entry;
      entry.iteration = e.at("iteration").get<int>();
      entry.stage = stage_from(e.at("stage").get<std::string>());
      entry.visit = e.value("visit", 0);
      for (const auto& a : e.value("actions", json::array()))
        entry.actions.push_back(a);
      s.scripts[role].push_back(std::move(entry));
    }
  }
  for (const auto& inj : j.value("injections", json::array()))
    s.injections.push_back(Injection::from_json(inj));
  for (const auto& e : j.value("expected_outcomes", json::array()))
    s.expected_outcomes.push_back(e);
  return s;
}

Scenario Scenario::from_file(const fs::path& p) {
  return from_json(read_json_file(p));
}

// ---------------------------------------------------------------------------
// injection
// ---------------------------------------------------------------------------

namespace {

ArtifactRecord require_target(Workspace& ws, int iteration,
                              const std::string& rel) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d", iteration);
  std::string full = "iterations/" + std::string(buf) + "/" + rel;
  auto a = ws.find_artifact_by_path(full, iteration);
  if (!a)
    throw UsageError("injection target does not exist at iteration " +
                     std::to_string(iteration) + ": " + rel);
  return *a;
}

} // namespace

std::vector<std::string> inject(Workspace& ws, const Injection& inj) {
  std::vector<std::string> mutated;
  switch (inj.kind) {
  case InjectionKind::duplicate_files: {
    auto source = require_target(ws, inj.at_iteration,
                                 inj.params.at("source").get<std::string>());
    std::string bytes = read_text_file(ws.artifact_file(source));
    for (const auto& t : inj.params.at("targets")) {
      auto target = require_target(ws, inj.at_iteration, t.get<std::string>());
      write_text_file(ws.artifact_file(target), bytes);
      mutated.push_back(target.id);
    }
    break;
  }
  case InjectionKind::invert_ci: {
    auto target = require_target(ws, inj.at_iteration, inj.target);
    json content = read_json_file(ws.artifact_file(target));
    int k = inj.params.value("count", 1);
    auto& intervals = content.at("intervals");
    for (int i = 0; i < k && i < static_cast<int>(intervals.size()); ++i) {
      double point = intervals[i].value("point", 0.0);
      intervals[i]["lower"] = point + 1.0;
      intervals[i]["upper"] = point + 2.0;
    }
    write_json_file(ws.artifact_file(target), content);
    mutated.push_back(target.id);
    break;
  }
  case InjectionKind::stale_table: {
    auto target = require_target(ws, inj.at_iteration, inj.target);
    json content = read_json_file(ws.artifact_file(target));
    std::string name = inj.params.at("name").get<std::string>();
    bool found = false;
    for (auto& hn : content.at("headline_numbers"))
      if (hn.value("name", std::string{}) == name) {
        hn["value"] = inj.params.at("value");
        found = true;
      }
    if (!found)
      throw UsageError("stale-table target has no headline number " + name);
    write_json_file(ws.artifact_file(target), content);
    mutated.push_back(target.id);
    break;
  }
  case InjectionKind::count_mismatch: {
    auto target = require_target(ws, inj.at_iteration, inj.target);
    json content = read_json_file(ws.artifact_file(target));
    content[inj.params.at("key").get<std::string>()] = inj.params.at("value");
    write_json_file(ws.artifact_file(target), content);
    mutated.push_back(target.id);
    break;
  }
  case InjectionKind::unsupported_stat: {
    auto target = require_target(ws, inj.at_iteration, inj.target);
    json content = read_json_file(ws.artifact_file(target));
    content["values"][inj.params.at("name").get<std::string>()] =
        inj.params.at("value");
    write_json_file(ws.artifact_file(target), content);
    mutated.push_back(target.id);
    break;
  }
  case InjectionKind::missing_output: {
    auto target = require_target(ws, inj.at_iteration, inj.target);
    fs::remove(ws.artifact_file(target));
    mutated.push_back(target.id);
    break;
  }
  case InjectionKind::remove_review_score: {
    auto target = require_target(ws, inj.at_iteration, inj.target);
    if (target.kind != ArtifactKind::review)
      throw UsageError("remove-review-score expects a review artifact");
    json content = read_json_file(ws.artifact_file(target));
    content.erase("score");
    write_json_file(ws.artifact_file(target), content);
    mutated.push_back(target.id);
    break;
  }
  case InjectionKind::pilot_as_general_claim: {
    auto target = require_target(ws, inj.at_iteration, inj.target);
    if (target.kind != ArtifactKind::draft)
      throw UsageError("pilot-as-general-claim expects a draft artifact");
    json content = read_json_file(ws.artifact_file(target));
    std::string claim = inj.params.at("claim").get<std::string>();
    bool found = false;
    for (auto& ref : content.at("claim_refs"))
      if (ref.value("claim_id", std::string{}) == claim) {
        ref["usage"] = "general-claim";
        found = true;
      }
    if (!found)
      throw UsageError("draft does not reference claim " + claim);
    write_json_file(ws.artifact_file(target), content);
    mutated.push_back(target.id);
    break;
  }
  }
  return mutated;
}

// ---------------------------------------------------------------------------
// run report
// ---------------------------------------------------------------------------

json RunReport::to_json() const {
  json checks_j = json::array();
  for (const auto& c : checks)
    checks_j.push_back(json{{"description", c.description},
                            {"passed", c.passed},
                            {"observed", c.observed}});
  json gates = json::object();
  for (const auto& [it, outcomes] : gate_outcomes) {
    json arr = json::array();
    for (auto o : outcomes) arr.push_back(to_string(o));
    gates[std::to_string(it)] = arr;
  }
  return json{{"schema_version", kSchemaVersion},
              {"scenario", scenario},
              {"seed", seed},
              {"passed", passed},
              {"checks", checks_j},
              {"gate_outcomes", gates},
              {"critical_findings", critical_findings},
              {"blocks", blocks},
              {"conversions", json{{"count", conversions.count},
                                   {"median_latency", conversions.median_latency},
                                   {"max_latency", conversions.max_latency}}}};
}

std::string RunReport::render() const {
  std::ostringstream out;
  out << "scenario: " << scenario << "\n";
  out << "result:   " << (passed ? "PASS" : "FAIL") << "\n";
  out << "gates:";
  for (const auto& [it, outcomes] : gate_outcomes) {
    out << "  it" << it << "=[";
    for (std::size_t i = 0; i < outcomes.size(); ++i)
      out << (i ? "," : "") << to_string(outcomes[i]);
    out << "]";
  }
  out << "\ncritical findings: " << critical_findings
      << "  blocks: " << blocks << "\n";
  out << "conversions: " << conversions.count
      << " (median latency " << conversions.median_latency << ", max "
      << conversions.max_latency << ")\n";
  for (const auto& c : checks)
    out << (c.passed ? "  [pass] " : "  [FAIL] ") << c.description
        << (c.observed.empty() ? "" : "  -- " + c.observed) << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// driver
// ---------------------------------------------------------------------------

struct ScenarioDriver::Kernel {
  Workspace ws;
  HarnessConfig cfg;
  ClaimRegistry registry;
  MemoryRouter memory;
  ResourceGovernor governor;
  Orchestrator orchestrator;
  RoleBus bus;
  Gatekeeper gate;
  SelfEvolver evolver;
  std::set<std::string> normalized; // reflection artifact ids already routed

  explicit Kernel(Workspace w, HarnessConfig c)
      : ws(std::move(w)), cfg(std::move(c)), registry(ws), memory(ws, cfg),
        governor(ws), orchestrator(ws, cfg),
        bus(ws, cfg, registry, orchestrator, governor, memory),
        gate(ws, cfg, registry), evolver(ws, cfg, memory) {}
};

ScenarioDriver::ScenarioDriver(Scenario scenario, fs::path root, unsigned seed)
    : scenario_(std::move(scenario)), root_(std::move(root)), seed_(seed) {}

fs::path ScenarioDriver::injection_log_path() const {
  fs::path p = root_;
  p += ".injections.log";
  return p;
}

RefResolver ScenarioDriver::make_resolver(Kernel& k) {
  return [&k](const std::string& ref) -> std::string {
    if (ref.rfind("$art:", 0) != 0) return ref;
    std::string rel = ref.substr(5);
    // Search the current iteration first, then walk backwards.
    for (int it = k.ws.current_iteration(); it >= 0; --it) {
      char buf[16];
      std::snprintf(buf, sizeof buf, "%04d", it);
      auto a = k.ws.find_artifact_by_path(
          "iterations/" + std::string(buf) + "/" + rel, it);
      if (a) return a->id;
    }
    throw UsageError("script reference does not resolve: " + ref);
  };
}

void ScenarioDriver::run_stage_actions(Kernel& k, int iteration, StageId stage,
                                       int visit) {
  auto resolve = make_resolver(k);
  for (auto role : all_roles()) {
    auto it = scenario_.scripts.find(role);
    if (it == scenario_.scripts.end()) continue;
    for (const auto& entry : it->second) {
      if (entry.iteration != iteration || entry.stage != stage ||
          entry.visit != visit)
        continue;
      for (const auto& action : entry.actions)
        k.bus.execute_action(role, action, resolve);
    }
  }
  evaluate_stop_conditions(k, iteration);
  close_issues_for_repairs(k, iteration);
}

void ScenarioDriver::apply_injections(Kernel& k, int iteration, StageId stage) {
  auto stage_for = [](InjectionKind kind) {
    switch (kind) {
    case InjectionKind::duplicate_files:
    case InjectionKind::invert_ci:
    case InjectionKind::count_mismatch:
    case InjectionKind::unsupported_stat:
    case InjectionKind::missing_output:
      return StageId::experiment;
    case InjectionKind::stale_table:
    case InjectionKind::pilot_as_general_claim:
      return StageId::writing;
    case InjectionKind::remove_review_score:
      return StageId::review;
    }
    return StageId::experiment;
  };
  for (std::size_t i = 0; i < scenario_.injections.size(); ++i) {
    const Injection& inj = scenario_.injections[i];
    if (inj.at_iteration != iteration || stage_for(inj.kind) != stage) continue;
    std::string key = std::to_string(i);
    if (injected_artifacts_.count(key)) continue; // one shot per injection
    auto mutated = inject(k.ws, inj);
    injected_artifacts_[key] = mutated;
    std::ofstream log(injection_log_path(), std::ios::app);
    log << json{{"injection", inj.to_json()}, {"mutated", mutated}}.dump()
        << "\n";
  }
}

void ScenarioDriver::normalize_reflections(Kernel& k, int iteration) {
  if (!scenario_.memory) return;
  for (const auto& a : k.ws.artifacts()) {
    if (a.kind != ArtifactKind::reflection || a.iteration != iteration)
      continue;
    if (k.normalized.count(a.id)) continue;
    k.normalized.insert(a.id);
    for (const auto& issue : k.memory.normalize(a)) k.memory.route(issue);
  }
}

void ScenarioDriver::evaluate_stop_conditions(Kernel& k, int iteration) {
  for (const auto& task : k.orchestrator.plan(iteration)) {
    if (task.status != TaskStatus::running) continue;
    double spent = 0;
    int failures = 0;
    for (const auto& s : k.governor.ledger().spends) {
      if (s.task_id != task.id) continue;
      spent += s.units;
      if (s.outcome == SpendOutcome::failed) ++failures;
    }
    auto claim_level =
        [&](const std::string& id) -> std::optional<MaturityLevel> {
      auto c = k.registry.find(id);
      if (!c) return std::nullopt;
      return c->maturity;
    };
    for (const auto& sc : task.stop_conditions)
      if (stop_condition_met(sc, spent, failures, claim_level)) {
        k.orchestrator.set_task_status(iteration, task.id, TaskStatus::stopped);
        break;
      }
  }
}

void ScenarioDriver::close_issues_for_repairs(Kernel& k, int iteration) {
  for (int it = 0; it <= iteration + 1; ++it) {
    for (const auto& task : k.orchestrator.plan(it)) {
      if (task.status != TaskStatus::completed) continue;
      if (task.id.rfind("repair-", 0) != 0) continue;
      std::string finding_id;
      for (const auto& r : task.cause_refs)
        if (r.rfind("finding:", 0) == 0) finding_id = r.substr(8);
      if (finding_id.empty()) continue;
      std::string failure_class;
      for (const auto& e : k.ws.events())
        if (e.kind == EventKind::validator_finding &&
            e.payload.value("id", std::string{}) == finding_id)
          failure_class = e.payload.value("failure_class", std::string{});
      for (const auto& issue : k.memory.issues())
        if (issue.failure_class == failure_class &&
            issue.status == IssueStatus::open)
          k.memory.close_issue(issue.id);
    }
  }
}

RunReport ScenarioDriver::run() {
  scenario_.validate();

  RunReport report;
  report.scenario = scenario_.name;
  report.seed = seed_;

  Workspace ws = Workspace::init(root_);
  HarnessConfig cfg = HarnessConfig::defaults();
  if (scenario_.gate_validators) cfg.gate.enabled = *scenario_.gate_validators;
  if (!scenario_.global_memory_dir.empty()) {
    fs::path global = scenario_.global_memory_dir;
    if (global.is_relative())
      global = fs::absolute(root_).parent_path() / global;
    cfg.memory.global_dir = global.string();
  }
  cfg.install(ws);
  write_default_protected(ws);

  Kernel k(std::move(ws), std::move(cfg));
  k.governor.set_total(scenario_.budget_units);

  GateDecision last_decision;
  k.orchestrator.set_gate_hook([&](int it) {
    GateDecision d = k.gate.run_quality_gate(it, k.bus.open_count(it));
    last_decision = d;
    return d;
  });

  if (scenario_.memory) k.memory.sync_global();

  static const std::vector<StageId> kChain = {
      StageId::ideation,   StageId::planning, StageId::experiment,
      StageId::validation, StageId::review,   StageId::reflection,
      StageId::writing};

  std::map<std::pair<int, StageId>, int> visits;
  for (int it = 0; it < scenario_.iterations; ++it) {
    int gate_retries = 0;
    while (true) {
      StageId stage = k.ws.current_stage();
      int visit = visits[{it, stage}]++;
      run_stage_actions(k, it, stage, visit);
      if (stage == StageId::reflection) normalize_reflections(k, it);
      apply_injections(k, it, stage);

      if (stage == StageId::writing) {
        try {
          k.orchestrator.advance_stage(StageId::quality_gate);
        } catch (const BlockedTransition& blocked) {
          report.gate_outcomes[it].push_back(blocked.decision.outcome);
          decisions_.push_back(blocked.decision);
          if (!blocked.decision.rollback_target)
            throw UsageError("blocked gate without a rollback target");
          if (++gate_retries > 3)
            throw UsageError("quality gate never passed at iteration " +
                             std::to_string(it));
          k.orchestrator.rollback(blocked.decision.rollback_target->first,
                                  blocked.decision.rollback_target->second,
                                  blocked.decision);
          continue; // resume from the rolled-back stage
        }
        report.gate_outcomes[it].push_back(last_decision.outcome);
        decisions_.push_back(last_decision);
        run_stage_actions(k, it, StageId::quality_gate,
                          visits[{it, StageId::quality_gate}]++);
        break;
      }

      auto chain_it = std::find(kChain.begin(), kChain.end(), stage);
      if (chain_it == kChain.end() || chain_it + 1 == kChain.end())
        throw UsageError("driver lost its place in the stage chain");
      k.orchestrator.advance_stage(*(chain_it + 1));
    }

    // End of iteration: route critical findings into repair tasks for the
    // next plan, then let the harness evolve at the quiescent point.
    for (const auto& f : last_decision.findings)
      if (f.severity == Severity::critical)
        k.evolver.generate_repair_task(f, it + 1, k.orchestrator);

    if (scenario_.evolution) {
      for (auto& proposal : k.evolver.evaluate_recurrence()) {
        auto u = k.evolver.propose(proposal);
        try {
          k.evolver.apply_update(u.id, /*approval_flag=*/false);
        } catch (const UsageError&) {
          // protected-constraint rejections are logged and skipped
        }
      }
    }

    if (it + 1 < scenario_.iterations)
      k.orchestrator.advance_stage(StageId::ideation);
  }

  for (const auto& d : decisions_) {
    if (d.outcome == GateOutcome::block) report.blocks++;
    for (const auto& f : d.findings)
      if (f.severity == Severity::critical) report.critical_findings++;
  }

  check_expectations(k, report);
  report.passed = std::all_of(report.checks.begin(), report.checks.end(),
                              [](const OutcomeCheck& c) { return c.passed; });
  return report;
}

void ScenarioDriver::check_expectations(Kernel& k, RunReport& report) {
  ConversionAuditor auditor(root_);
  ConversionReport conversions = auditor.extract_conversions();
  report.conversions = conversions.summary;

  auto add = [&](std::string description, bool ok, std::string observed = "") {
    report.checks.push_back({std::move(description), ok, std::move(observed)});
  };

  for (const auto& e : scenario_.expected_outcomes) {
    std::string kind = e.at("kind").get<std::string>();

    if (kind == "gate-outcome") {
      int it = e.at("iteration").get<int>();
      GateOutcome want = gate_outcome_from(e.at("value").get<std::string>());
      bool ok = false;
      std::string seen;
      for (auto o : report.gate_outcomes[it]) {
        seen += to_string(o) + " ";
        if (o == want) ok = true;
      }
      add("gate outcome " + to_string(want) + " at iteration " +
              std::to_string(it),
          ok, "saw: " + seen);
    } else if (kind == "finding-class") {
      int it = e.at("iteration").get<int>();
      std::string want = e.at("value").get<std::string>();
      bool ok = false;
      for (const auto& ev : k.ws.events())
        if (ev.kind == EventKind::validator_finding && ev.iteration == it &&
            (ev.payload.value("failure_class", std::string{}) == want ||
             ev.payload.value("validator", std::string{}) == want))
          ok = true;
      add("finding " + want + " at iteration " + std::to_string(it), ok);
    } else if (kind == "critical-count") {
      int want = e.at("value").get<int>();
      add("exactly " + std::to_string(want) + " critical findings",
          report.critical_findings == want,
          "saw " + std::to_string(report.critical_findings));
    } else if (kind == "rollback") {
      int it = e.at("iteration").get<int>();
      StageId stage = stage_from(e.at("stage").get<std::string>());
      bool ok = false;
      for (const auto& ev : k.ws.events())
        if (ev.kind == EventKind::rollback &&
            ev.payload.value("target_iteration", -1) == it &&
            ev.payload.value("target_stage", std::string{}) ==
                to_string(stage))
          ok = true;
      add("rollback to (" + std::to_string(it) + ", " + to_string(stage) + ")",
          ok);
    } else if (kind == "conversion") {
      ConversionKind want =
          conversion_kind_from(e.at("conversion_kind").get<std::string>());
      int min_count = e.value("min_count", 1);
      int n = 0;
      for (const auto& c : conversions.events)
        if (c.kind == want &&
            (!e.contains("latency") || c.latency == e["latency"].get<int>()))
          ++n;
      add("at least " + std::to_string(min_count) + " " + to_string(want) +
              " conversions",
          n >= min_count, "saw " + std::to_string(n));
    } else if (kind == "zero-critical") {
      add("zero critical findings", report.critical_findings == 0,
          "saw " + std::to_string(report.critical_findings));
    } else if (kind == "no-blocks") {
      add("no blocking gate decisions", report.blocks == 0,
          "saw " + std::to_string(report.blocks));
    } else if (kind == "task-present") {
      int it = e.at("iteration").get<int>();
      std::string needle = e.at("id_contains").get<std::string>();
      bool ok = false;
      std::string ids;
      for (const auto& t : k.orchestrator.plan(it)) {
        ids += t.id + " ";
        if (t.id.find(needle) != std::string::npos) ok = true;
      }
      add("plan for iteration " + std::to_string(it) + " contains task ~" +
              needle,
          ok, "plan: " + ids);
    } else if (kind == "task-cites") {
      int it = e.at("iteration").get<int>();
      std::string needle = e.at("cause_contains").get<std::string>();
      bool ok = false;
      for (const auto& t : k.orchestrator.plan(it))
        for (const auto& c : t.cause_refs)
          if (c.find(needle) != std::string::npos) ok = true;
      add("a task in iteration " + std::to_string(it) + " cites ~" + needle,
          ok);
    } else if (kind == "overlay-present") {
      RoleId role = role_from(e.at("role").get<std::string>());
      std::string needle = e.at("contains").get<std::string>();
      bool ok = false;
      for (const auto& o :
           k.memory.overlays_for(role, k.ws.current_iteration()))
        if (o.lesson.find(needle) != std::string::npos) ok = true;
      add("overlay for " + to_string(role) + " mentions " + needle, ok);
    } else if (kind == "sanity-check") {
      double cost = e.at("cost").get<double>();
      bool ok = false;
      for (const auto& c : k.governor.ledger().sanity_checks)
        if (c.cost_units == cost) ok = true;
      add("sanity check with cost " + std::to_string(cost) + " registered",
          ok);
    } else if (kind == "catch-completeness") {
      bool all_ok = true;
      std::string detail;
      for (const auto& [key, mutated] : injected_artifacts_) {
        bool caught = false;
        for (const auto& ev : k.ws.events()) {
          if (ev.kind != EventKind::validator_finding) continue;
          if (ev.payload.value("severity", std::string{}) != "critical")
            continue;
          for (const auto& a : ev.payload.value("offending_artifacts",
                                                std::vector<std::string>{}))
            if (std::find(mutated.begin(), mutated.end(), a) != mutated.end())
              caught = true;
        }
        if (!caught) {
          all_ok = false;
          detail += "injection " + key + " uncaught; ";
        }
      }
      add("every injection produced a critical finding naming an injected "
          "artifact",
          all_ok, detail);
    } else {
      add("unknown expectation kind " + kind, false);
    }
  }
}

} // namespace harness
