#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "harness/orchestrator.hpp"
#include "test_util.hpp"

using namespace harness;
using harness::test::TempDir;

namespace {

struct OrchFixture {
  TempDir tmp;
  Workspace ws;
  HarnessConfig cfg;
  Orchestrator orch;

  OrchFixture()
      : ws(Workspace::init(tmp.sub("ws"))), cfg(HarnessConfig::defaults()),
        orch(ws, cfg) {
    cfg.install(ws);
  }

  ArtifactRecord put(const std::string& rel, const json& content) {
    fs::path file = ws.ensure_iteration_dir(ws.current_iteration()) / rel;
    fs::create_directories(file.parent_path());
    write_json_file(file, content);
    return ws.register_artifact(file, ArtifactKind::other, "system",
                                ws.current_iteration());
  }

  void walk_to(StageId target) {
    static const std::vector<StageId> chain = {
        StageId::ideation,   StageId::planning, StageId::experiment,
        StageId::validation, StageId::review,   StageId::reflection,
        StageId::writing};
    auto it = std::find(chain.begin(), chain.end(), ws.current_stage());
    while (ws.current_stage() != target && it + 1 != chain.end()) {
      ++it;
      orch.advance_stage(*it);
    }
  }

  TaskRecord task(const std::string& id,
                  std::vector<std::string> deps = {},
                  TaskScale scale = TaskScale::pilot) {
    TaskRecord t;
    t.id = id;
    t.question = "task " + id;
    t.dependencies = std::move(deps);
    t.scale = scale;
    t.budget_units = 1;
    return t;
  }
};

} // namespace

TEST_CASE("legal transitions follow the policy table") {
  OrchFixture fx;
  fx.orch.advance_stage(StageId::planning);
  fx.orch.advance_stage(StageId::experiment);
  auto ev = fx.orch.advance_stage(StageId::validation);
  CHECK(ev.kind == EventKind::stage_start);
  CHECK(fx.ws.current_stage() == StageId::validation);
}

TEST_CASE("writing self-loop appends two legal events") {
  OrchFixture fx;
  fx.walk_to(StageId::writing);
  auto before = fx.ws.events().size();
  fx.orch.advance_stage(StageId::writing);
  REQUIRE(fx.ws.events().size() == before + 2);
  CHECK(fx.ws.events()[before].kind == EventKind::stage_end);
  CHECK(fx.ws.events()[before].stage == StageId::writing);
  CHECK(fx.ws.events()[before + 1].kind == EventKind::stage_start);
  CHECK(fx.ws.events()[before + 1].stage == StageId::writing);
}

TEST_CASE("transitions outside the policy table are rejected") {
  OrchFixture fx;
  CHECK_THROWS_AS(fx.orch.advance_stage(StageId::writing), UsageError);
}

TEST_CASE("a blocked guard raises BlockedTransition carrying the decision") {
  OrchFixture fx;
  fx.orch.set_gate_hook([](int iteration) {
    GateDecision d;
    d.gate_id = "quality-gate:it" + std::to_string(iteration);
    d.outcome = GateOutcome::block;
    d.rollback_target = {{iteration, StageId::review}};
    d.reason = "no review score";
    return d;
  });
  fx.walk_to(StageId::writing);
  try {
    fx.orch.advance_stage(StageId::quality_gate);
    FAIL("expected BlockedTransition");
  } catch (const BlockedTransition& b) {
    CHECK(b.decision.outcome == GateOutcome::block);
    CHECK(b.decision.rollback_target->second == StageId::review);
  }
  CHECK(fx.ws.current_stage() == StageId::writing); // unchanged
}

TEST_CASE("an allowed guard lets the transition through and the iteration "
          "advances at the close") {
  OrchFixture fx;
  fx.orch.set_gate_hook([](int) {
    GateDecision d;
    d.outcome = GateOutcome::allow;
    return d;
  });
  fx.walk_to(StageId::writing);
  fx.orch.advance_stage(StageId::quality_gate);
  CHECK(fx.ws.current_iteration() == 0);
  fx.orch.advance_stage(StageId::ideation);
  CHECK(fx.ws.current_iteration() == 1);
  CHECK(fs::exists(fx.ws.iteration_dir(1)));
}

// ---------------------------------------------------------------------------
// plans
// ---------------------------------------------------------------------------

TEST_CASE("plan mutations must cite a cause") {
  OrchFixture fx;
  PlanMutation add;
  add.op = PlanMutation::Op::add;
  add.task = fx.task("t1");
  CHECK_THROWS_WITH_AS(fx.orch.mutate_plan(0, {add}, {}),
                       doctest::Contains("unattributed mutation"), UsageError);
}

TEST_CASE("mutations that introduce a cycle are rejected whole") {
  OrchFixture fx;
  fx.orch.set_plan(0, {fx.task("a"), fx.task("b", {"a"})});
  PlanMutation bad;
  bad.op = PlanMutation::Op::add_dependency;
  bad.task_id = "a";
  bad.dep_id = "b";
  auto cause = fx.put("evidence.json", json{{"why", "loop"}});
  CHECK_THROWS_AS(fx.orch.mutate_plan(0, {bad}, {"artifact:" + cause.id}),
                  UsageError);
  CHECK(fx.orch.plan(0)[0].dependencies.empty());
}

TEST_CASE("removing a task nothing depends on shrinks the plan by one") {
  OrchFixture fx;
  fx.orch.set_plan(0, {fx.task("a"), fx.task("b")});
  auto cause = fx.put("evidence.json", json{{"why", "obsolete"}});
  PlanMutation rm;
  rm.op = PlanMutation::Op::remove;
  rm.task_id = "b";
  auto plan = fx.orch.mutate_plan(0, {rm}, {"artifact:" + cause.id});
  CHECK(plan.size() == 1);
  CHECK(plan[0].id == "a");
}

TEST_CASE("removing a depended-on task is rejected") {
  OrchFixture fx;
  fx.orch.set_plan(0, {fx.task("a"), fx.task("b", {"a"})});
  auto cause = fx.put("evidence.json", json::object());
  PlanMutation rm;
  rm.op = PlanMutation::Op::remove;
  rm.task_id = "a";
  CHECK_THROWS_AS(fx.orch.mutate_plan(0, {rm}, {"artifact:" + cause.id}),
                  UsageError);
}

TEST_CASE("reorder keeps a sanity check ahead of its expensive dependent") {
  OrchFixture fx;
  fx.orch.set_plan(0, {fx.task("expensive", {"check"}), fx.task("check")});
  auto cause = fx.put("evidence.json", json::object());
  PlanMutation reorder;
  reorder.op = PlanMutation::Op::reorder;
  reorder.order = {"check", "expensive"};
  auto plan = fx.orch.mutate_plan(0, {reorder}, {"artifact:" + cause.id});

  // Oracle: topological sort must place check before expensive, and the
  // stored order must respect it.
  std::map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < plan.size(); ++i) position[plan[i].id] = i;
  for (const auto& t : plan)
    for (const auto& dep : t.dependencies)
      CHECK(position[dep] < position[t.id]);
}

TEST_CASE("plan mutations persist artifacts and an attributable event") {
  OrchFixture fx;
  auto cause = fx.put("finding.json", json{{"found", true}});
  PlanMutation add;
  add.op = PlanMutation::Op::add;
  add.task = fx.task("repair");
  fx.orch.mutate_plan(0, {add}, {"artifact:" + cause.id});

  const auto& events = fx.ws.events();
  auto it = std::find_if(events.rbegin(), events.rend(), [](const auto& e) {
    return e.kind == EventKind::task_update &&
           e.payload.value("action", std::string{}) == "plan-mutation";
  });
  REQUIRE(it != events.rend());
  REQUIRE(it->cause_refs.size() == 1);
  CHECK(it->cause_refs[0] == "artifact:" + cause.id);
  CHECK(it->payload_refs.size() == 2); // plan file + mutation record

  // Both artifacts are registered and readable.
  for (const auto& id : it->payload_refs) {
    auto a = fx.ws.find_artifact(id);
    REQUIRE(a.has_value());
    CHECK_NOTHROW(read_json_file(fx.ws.artifact_file(*a)));
  }
}

TEST_CASE("plans survive reopen") {
  TempDir tmp;
  {
    Workspace ws = Workspace::init(tmp.sub("ws"));
    HarnessConfig cfg = HarnessConfig::defaults();
    cfg.install(ws);
    Orchestrator orch(ws, cfg);
    TaskRecord t;
    t.id = "t1";
    t.question = "persisted";
    orch.set_plan(0, {t});
  }
  Workspace ws = Workspace::open(tmp.sub("ws"));
  HarnessConfig cfg = HarnessConfig::load(ws);
  Orchestrator orch(ws, cfg);
  REQUIRE(orch.plan(0).size() == 1);
  CHECK(orch.plan(0)[0].question == "persisted");
}

// ---------------------------------------------------------------------------
// rollback
// ---------------------------------------------------------------------------

namespace {

GateDecision blocking_decision(int iteration) {
  GateDecision d;
  d.gate_id = "quality-gate:it" + std::to_string(iteration);
  d.outcome = GateOutcome::block;
  d.rollback_target = {{iteration, StageId::review}};
  return d;
}

} // namespace

TEST_CASE("rollback targets the review stage and preserves artifacts") {
  OrchFixture fx;
  fx.walk_to(StageId::writing);
  auto artifact = fx.put("kept.json", json{{"keep", true}});
  fx.orch.rollback(0, StageId::review, blocking_decision(0));
  CHECK(fx.ws.current_stage() == StageId::review);
  CHECK(fs::exists(fx.ws.artifact_file(artifact)));
  const auto& events = fx.ws.events();
  auto rb = std::find_if(events.begin(), events.end(), [](const auto& e) {
    return e.kind == EventKind::rollback;
  });
  REQUIRE(rb != events.end());
  CHECK(rb->payload["target_stage"] == "review");
}

TEST_CASE("rollback rejects a non-blocking cause") {
  OrchFixture fx;
  GateDecision d;
  d.outcome = GateOutcome::downgrade;
  CHECK_THROWS_AS(fx.orch.rollback(0, StageId::review, d), UsageError);
}

TEST_CASE("rollback to the current position is a recorded no-op") {
  OrchFixture fx;
  fx.walk_to(StageId::review);
  auto before_state = fx.ws.current_stage();
  auto before_events = fx.ws.events().size();
  fx.orch.rollback(0, StageId::review, blocking_decision(0));
  CHECK(fx.ws.current_stage() == before_state);
  CHECK(fx.ws.events().size() == before_events + 1); // just the rollback event
}

TEST_CASE("rollback ahead of the current position is rejected") {
  OrchFixture fx;
  fx.walk_to(StageId::review);
  CHECK_THROWS_AS(fx.orch.rollback(0, StageId::writing, blocking_decision(0)),
                  UsageError);
  CHECK_THROWS_AS(fx.orch.rollback(1, StageId::review, blocking_decision(1)),
                  UsageError);
}

TEST_CASE("replay after rollback reproduces the live stage") {
  OrchFixture fx;
  fx.walk_to(StageId::writing);
  fx.orch.rollback(0, StageId::review, blocking_decision(0));
  StageId live = fx.ws.current_stage();
  Workspace replayed =
      Workspace::open(fx.tmp.sub("ws"), Workspace::Mode::read_only);
  CHECK(replayed.current_stage() == live);
  CHECK(replayed.current_iteration() == fx.ws.current_iteration());
}

// ---------------------------------------------------------------------------
// pilot/full boundary and stop conditions
// ---------------------------------------------------------------------------

TEST_CASE("a full task cannot start while its pilot dependency failed or "
          "was gated not-ready") {
  OrchFixture fx;
  auto pilot = fx.task("pilot");
  auto full = fx.task("full", {"pilot"}, TaskScale::full);
  fx.orch.set_plan(0, {pilot, full});

  fx.orch.set_task_status(0, "pilot", TaskStatus::failed);
  CHECK_THROWS_AS(fx.orch.start_task(0, "full"), UsageError);

  fx.orch.set_task_status(0, "pilot", TaskStatus::completed);
  fx.orch.record_pilot_gate(0, "pilot", GateOutcome::block);
  CHECK_THROWS_AS(fx.orch.start_task(0, "full"), UsageError);

  fx.orch.record_pilot_gate(0, "pilot", GateOutcome::allow);
  CHECK_NOTHROW(fx.orch.start_task(0, "full"));
  CHECK(fx.orch.plan(0)[1].status == TaskStatus::running);
}

TEST_CASE("stop conditions evaluate at task-update time") {
  auto none = [](const std::string&) -> std::optional<MaturityLevel> {
    return std::nullopt;
  };
  StopCondition budget{"max-budget", json{{"units", 10.0}}};
  CHECK(stop_condition_met(budget, 10.0, 0, none));
  CHECK_FALSE(stop_condition_met(budget, 9.9, 0, none));

  StopCondition failures{"max-failures", json{{"count", 2}}};
  CHECK(stop_condition_met(failures, 0, 2, none));
  CHECK_FALSE(stop_condition_met(failures, 0, 1, none));

  StopCondition evidence{"evidence-threshold",
                         json{{"claim", "c1"}, {"level", "analysis-ready"}}};
  auto resolved = [](const std::string&) -> std::optional<MaturityLevel> {
    return MaturityLevel::paper_ready;
  };
  CHECK(stop_condition_met(evidence, 0, 0, resolved));
  CHECK_FALSE(stop_condition_met(evidence, 0, 0, none));
}
