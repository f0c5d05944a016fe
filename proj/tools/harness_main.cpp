// harness — workspace kernel and audit CLI.
//
// Workspace-modifying subcommands resolve the root from --root, then the
// HARNESS_WORKSPACE environment variable, then the current directory.
// Audit subcommands open the workspace read-only and can run next to a
// live writer.

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "harness/auditor.hpp"
#include "harness/evolver.hpp"
#include "harness/fixtures.hpp"
#include "harness/gatekeeper.hpp"
#include "harness/scenario.hpp"

using namespace harness;

namespace {

fs::path resolve_root(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("HARNESS_WORKSPACE")) return env;
  return fs::current_path();
}

// The full writer-side kernel over one workspace.
struct Kernel {
  Workspace ws;
  HarnessConfig cfg;
  ClaimRegistry registry;
  MemoryRouter memory;
  ResourceGovernor governor;
  Orchestrator orchestrator;
  RoleBus bus;
  Gatekeeper gate;
  SelfEvolver evolver;

  explicit Kernel(const fs::path& root)
      : ws(Workspace::open(root)), cfg(HarnessConfig::load(ws)), registry(ws),
        memory(ws, cfg), governor(ws), orchestrator(ws, cfg),
        bus(ws, cfg, registry, orchestrator, governor, memory),
        gate(ws, cfg, registry), evolver(ws, cfg, memory) {
    orchestrator.set_gate_hook([this](int iteration) {
      return gate.run_quality_gate(iteration, bus.open_count(iteration));
    });
  }
};

void print_records(const json& array_like) {
  for (const auto& row : array_like) std::cout << row.dump() << "\n";
}

int run_audit(const fs::path& root, const std::string& what,
              const std::string& format) {
  ConversionAuditor auditor(root);
  bool table = format != "records";
  if (what == "conversions") {
    auto report = auditor.extract_conversions();
    if (table) {
      std::printf("conversions: %d  median latency: %d  max latency: %d\n",
                  report.summary.count, report.summary.median_latency,
                  report.summary.max_latency);
      std::printf("%-10s %-28s %-12s %-9s %s\n", "kind", "signal", "update",
                  "latency", "harness functions");
      for (const auto& e : report.events) {
        std::string tags;
        for (auto h : e.harness_functions)
          tags += (tags.empty() ? "" : ",") + to_string(h);
        std::printf("%-10s %-28s %-12s %-9d %s\n", to_string(e.kind).c_str(),
                    e.signal_ref.c_str(), e.update_ref.c_str(), e.latency,
                    tags.c_str());
      }
      for (const auto& b : report.broken_traces)
        std::printf("broken trace: %s\n", b.c_str());
    } else {
      json rows = json::array();
      for (const auto& e : report.events) rows.push_back(e.to_json());
      print_records(rows);
    }
    return 0;
  }
  if (what == "transitions") {
    auto matrix = auditor.transition_matrix();
    if (table) {
      std::printf("%-12s %-12s %s\n", "from", "to", "count");
      for (const auto& [key, n] : matrix.counts)
        std::printf("%-12s %-12s %d\n", to_string(key.first).c_str(),
                    to_string(key.second).c_str(), n);
      std::printf("total: %d\n", matrix.total());
    } else {
      print_records(matrix.to_json());
    }
    return 0;
  }
  if (what == "reviews") {
    auto report = auditor.review_to_action();
    if (table) {
      std::printf("%-10s %-6s %-9s %-7s %-9s %-6s\n", "movement", "rows",
                  "delta", "high", "focus", "plans");
      for (const auto& m : {"down", "flat", "up", "no-prior"}) {
        const auto& agg = report.by_movement.at(m);
        std::printf("%-10s %-6d %-9.2f %-7.2f %-9.2f %-6d\n", m, agg.rows,
                    agg.mean_delta, agg.mean_high_severity,
                    agg.mean_focus_items, agg.visible_plans);
      }
    } else {
      json rows = json::array();
      for (const auto& r : report.rows) rows.push_back(r.to_json());
      print_records(rows);
    }
    return 0;
  }
  if (what == "failures") {
    auto rows = auditor.failure_registry();
    if (table) {
      std::printf("%-10s %-24s %-14s %s\n", "finding", "failure class",
                  "update", "signal artifacts");
      for (const auto& r : rows) {
        std::string arts;
        for (const auto& a : r.signal_artifacts)
          arts += (arts.empty() ? "" : ",") + a;
        std::printf("%-10s %-24s %-14s %s\n", r.finding_id.c_str(),
                    r.failure_class.c_str(), r.later_update.c_str(),
                    arts.c_str());
      }
    } else {
      json out = json::array();
      for (const auto& r : rows) out.push_back(r.to_json());
      print_records(out);
    }
    return 0;
  }
  std::cerr << "unknown audit: " << what << "\n";
  return 2;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"file-backed research-harness kernel and audit CLI"};
  app.require_subcommand(1);
  std::string root_flag;
  app.add_option("--root", root_flag, "workspace root (or HARNESS_WORKSPACE)");

  auto* init_cmd = app.add_subcommand("init", "create a fresh workspace");
  std::string init_root;
  init_cmd->add_option("root", init_root, "workspace directory")->required();

  auto* advance_cmd = app.add_subcommand("advance", "advance the stage machine");
  std::string next_stage;
  advance_cmd->add_option("--next", next_stage, "target stage")->required();

  auto* plan_cmd = app.add_subcommand("plan", "task plan operations");
  auto* plan_mutate = plan_cmd->add_subcommand("mutate", "apply plan mutations");
  std::string mutations_file;
  std::vector<std::string> causes;
  int plan_iteration = 0;
  plan_mutate->add_option("--file", mutations_file,
                          "json file with a mutations array")->required();
  plan_mutate->add_option("--cause", causes,
                          "citing refs (artifact:<id>, finding:<id>, ...)")
      ->required();
  plan_mutate->add_option("--iteration", plan_iteration, "plan iteration")
      ->required();

  auto* claim_cmd = app.add_subcommand("claim", "claim registry operations");
  auto* claim_check = claim_cmd->add_subcommand("check", "rule-table check");
  std::string claim_id, claim_usage = "general-claim";
  claim_check->add_option("--claim", claim_id)->required();
  claim_check->add_option("--usage", claim_usage,
                          "pilot-mention|general-claim|headline");
  auto* claim_promote = claim_cmd->add_subcommand("promote", "raise one level");
  std::string promote_id, promote_to;
  std::vector<std::string> promote_evidence;
  claim_promote->add_option("--claim", promote_id)->required();
  claim_promote->add_option("--to", promote_to)->required();
  claim_promote->add_option("--evidence", promote_evidence,
                            "<artifact-id>:<edge-kind> pairs");
  auto* claim_trace = claim_cmd->add_subcommand("trace", "evidence path");
  std::string trace_id;
  claim_trace->add_option("--claim", trace_id)->required();

  auto* gate_cmd = app.add_subcommand("gate", "quality gate");
  auto* gate_run = gate_cmd->add_subcommand("run", "run the quality gate");
  int gate_iteration = 0;
  gate_run->add_option("--iteration", gate_iteration)->required();

  auto* memory_cmd = app.add_subcommand("memory", "routed memory");
  auto* memory_digest =
      memory_cmd->add_subcommand("digest", "issue category counts");

  auto* schedule_cmd = app.add_subcommand("schedule", "dependency layers");
  std::string schedule_plan_file;
  int schedule_iteration = -1;
  schedule_cmd->add_option("--plan", schedule_plan_file,
                           "plan json (defaults to the stored plan)");
  schedule_cmd->add_option("--iteration", schedule_iteration,
                           "iteration whose stored plan to schedule");

  auto* evolve_cmd = app.add_subcommand("evolve", "harness self-evolution");
  auto* evolve_propose =
      evolve_cmd->add_subcommand("propose", "recurrence proposals");
  auto* evolve_apply = evolve_cmd->add_subcommand("apply", "apply an update");
  std::string update_id;
  bool approve = false;
  evolve_apply->add_option("--update", update_id)->required();
  evolve_apply->add_flag("--approve", approve,
                         "approve a protected-constraint change");

  auto* audit_cmd = app.add_subcommand("audit", "read-only forensics");
  std::string audit_what, audit_format = "table";
  audit_cmd->add_option("what", audit_what,
                        "conversions|transitions|reviews|failures")
      ->required();
  audit_cmd->add_option("--format", audit_format, "table|records");

  auto* run_cmd = app.add_subcommand("run", "run a scripted scenario");
  std::string scenario_file, report_file, run_root;
  unsigned seed = 0;
  run_cmd->add_option("--scenario", scenario_file)->required();
  run_cmd->add_option("--seed", seed, "scenario-level randomness seed");
  run_cmd->add_option("--report", report_file, "write the run report json");
  run_cmd->add_option("--workspace", run_root,
                      "fresh workspace root for the run")->required();

  auto* inject_cmd =
      app.add_subcommand("inject", "mutate registered artifacts");
  std::string inject_spec;
  inject_cmd->add_option("--spec", inject_spec, "injection json file")
      ->required();

  auto* fixtures_cmd = app.add_subcommand("fixtures", "fixture workspaces");
  auto* fixtures_build =
      fixtures_cmd->add_subcommand("build", "generate fixtures");
  std::string fixtures_out;
  fixtures_build->add_option("outdir", fixtures_out)->required();

  auto* report_cmd = app.add_subcommand("report", "render a run report");
  std::string report_in;
  report_cmd->add_option("file", report_in, "run report json")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*init_cmd) {
      Workspace ws = Workspace::init(init_root);
      HarnessConfig::defaults().install(ws);
      write_default_protected(ws);
      std::cout << "initialized workspace at " << ws.root().string() << "\n";
      return 0;
    }

    const fs::path root = resolve_root(root_flag);

    if (*advance_cmd) {
      Kernel k(root);
      try {
        auto ev = k.orchestrator.advance_stage(stage_from(next_stage));
        std::cout << "now at iteration " << ev.iteration << ", stage "
                  << to_string(ev.stage) << "\n";
      } catch (const BlockedTransition& b) {
        std::cout << "blocked: " << b.decision.reason << "\n"
                  << render_findings_table(b.decision.findings);
        if (b.decision.rollback_target) {
          auto [iteration, stage] = *b.decision.rollback_target;
          k.orchestrator.rollback(iteration, stage, b.decision);
          std::cout << "rolled back to iteration " << iteration << ", stage "
                    << to_string(stage) << "\n";
        }
        return 1;
      }
      return 0;
    }

    if (*plan_mutate) {
      Kernel k(root);
      json spec = read_json_file(mutations_file);
      std::vector<PlanMutation> mutations;
      for (const auto& m : spec.at("mutations")) {
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
          throw UsageError("unknown mutation op " + op);
        }
        mutations.push_back(std::move(pm));
      }
      auto plan = k.orchestrator.mutate_plan(plan_iteration, mutations, causes);
      std::cout << "plan for iteration " << plan_iteration << " now has "
                << plan.size() << " tasks\n";
      return 0;
    }

    if (*claim_check) {
      Kernel k(root);
      auto outcome = k.registry.check(claim_id, usage_from(claim_usage));
      std::cout << outcome.to_json().dump(2) << "\n";
      return outcome.outcome == GateOutcome::block ? 1 : 0;
    }
    if (*claim_promote) {
      Kernel k(root);
      std::vector<EvidenceEdge> evidence;
      for (const auto& pair : promote_evidence) {
        auto colon = pair.rfind(':');
        EvidenceEdge e;
        e.artifact_id = pair.substr(0, colon);
        e.kind = colon == std::string::npos
                     ? EdgeKind::supports
                     : edge_kind_from(pair.substr(colon + 1));
        evidence.push_back(e);
      }
      auto claim =
          k.registry.promote(promote_id, maturity_from(promote_to), evidence);
      std::cout << "claim " << claim.id << " is now "
                << to_string(claim.maturity) << "\n";
      return 0;
    }
    if (*claim_trace) {
      Kernel k(root);
      for (const auto& entry : k.registry.trace(trace_id))
        std::printf("seq %-6llu %-16s %-12s%s\n",
                    static_cast<unsigned long long>(entry.seq),
                    to_string(entry.kind).c_str(), entry.artifact_id.c_str(),
                    entry.superseded ? "  (superseded)" : "");
      return 0;
    }

    if (*gate_run) {
      Kernel k(root);
      auto decision = k.gate.run_quality_gate(gate_iteration,
                                              k.bus.open_count(gate_iteration));
      std::cout << "gate " << decision.gate_id << ": "
                << to_string(decision.outcome) << "\n"
                << render_findings_table(decision.findings);
      return decision.outcome == GateOutcome::block ? 1 : 0;
    }

    if (*memory_digest) {
      Workspace ws = Workspace::open(root, Workspace::Mode::read_only);
      HarnessConfig cfg = HarnessConfig::load(ws);
      MemoryRouter memory(ws, cfg);
      int total = 0;
      for (const auto& [category, count] : memory.digest()) {
        std::printf("%-12s %d\n", to_string(category).c_str(), count);
        total += count;
      }
      std::printf("%-12s %d\n", "total", total);
      return 0;
    }

    if (*schedule_cmd) {
      Kernel k(root);
      Plan plan;
      if (!schedule_plan_file.empty()) {
        for (const auto& t : read_json_file(schedule_plan_file).at("tasks"))
          plan.push_back(TaskRecord::from_json(t));
      } else {
        plan = k.orchestrator.plan(schedule_iteration >= 0
                                       ? schedule_iteration
                                       : k.ws.current_iteration());
      }
      auto result = k.governor.schedule(plan);
      for (std::size_t layer = 0; layer < result.layers.size(); ++layer) {
        std::printf("layer %zu:", layer);
        for (const auto& id : result.layers[layer])
          std::printf(" %s", id.c_str());
        std::printf("\n");
      }
      for (const auto& d : result.deferred)
        std::printf("deferred %s: %s\n", d.task_id.c_str(), d.reason.c_str());
      return 0;
    }

    if (*evolve_propose) {
      Kernel k(root);
      auto proposals = k.evolver.evaluate_recurrence();
      for (auto& p : proposals) {
        auto u = k.evolver.propose(p);
        std::cout << u.id << " " << to_string(u.kind) << " "
                  << u.payload.dump() << "\n";
      }
      if (proposals.empty()) std::cout << "no recurrences above threshold\n";
      return 0;
    }
    if (*evolve_apply) {
      Kernel k(root);
      auto u = k.evolver.apply_update(update_id, approve);
      std::cout << "applied " << u.id << " at seq " << u.applied_at << "\n";
      return 0;
    }

    if (*audit_cmd) return run_audit(root, audit_what, audit_format);

    if (*run_cmd) {
      Scenario scenario = Scenario::from_file(scenario_file);
      ScenarioDriver driver(scenario, run_root, seed);
      RunReport run_report = driver.run();
      std::cout << run_report.render();
      if (!report_file.empty())
        write_json_file(report_file, run_report.to_json());
      return run_report.passed ? 0 : 1;
    }

    if (*inject_cmd) {
      Workspace ws = Workspace::open(root);
      auto injection = Injection::from_json(read_json_file(inject_spec));
      for (const auto& id : inject(ws, injection)) std::cout << id << "\n";
      return 0;
    }

    if (*fixtures_build) {
      for (const auto& m : build_fixtures(fixtures_out))
        std::cout << m.name << " -> "
                  << (fs::path(fixtures_out) / m.name).string() << "\n";
      return 0;
    }

    if (*report_cmd) {
      json j = read_json_file(report_in);
      std::cout << "scenario: " << j.value("scenario", std::string{}) << "\n"
                << "result:   " << (j.value("passed", false) ? "PASS" : "FAIL")
                << "\n";
      for (const auto& c : j.value("checks", json::array()))
        std::cout << (c.value("passed", false) ? "  [pass] " : "  [FAIL] ")
                  << c.value("description", std::string{}) << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
