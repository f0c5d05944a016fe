#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "harness/governor.hpp"
#include "test_util.hpp"

using namespace harness;
using harness::test::TempDir;

namespace {

struct GovFixture {
  TempDir tmp;
  Workspace ws;
  ResourceGovernor governor;

  GovFixture(double total = 1000)
      : ws(Workspace::init(tmp.sub("ws"))), governor(ws) {
    governor.set_total(total);
  }

  static TaskRecord task(const std::string& id,
                         std::vector<std::string> deps = {},
                         double budget = 1,
                         TaskScale scale = TaskScale::pilot) {
    TaskRecord t;
    t.id = id;
    t.question = "task " + id;
    t.dependencies = std::move(deps);
    t.budget_units = budget;
    t.scale = scale;
    return t;
  }
};

} // namespace

TEST_CASE("a chain schedules as three ordered layers") {
  GovFixture fx;
  Plan plan = {GovFixture::task("a"), GovFixture::task("b", {"a"}),
               GovFixture::task("c", {"b"})};
  auto result = fx.governor.schedule(plan);
  REQUIRE(result.layers.size() == 3);
  CHECK(result.layers[0] == std::vector<std::string>{"a"});
  CHECK(result.layers[1] == std::vector<std::string>{"b"});
  CHECK(result.layers[2] == std::vector<std::string>{"c"});
}

TEST_CASE("random DAG layers equal the longest-path-depth oracle") {
  std::mt19937 rng(99);
  for (int round = 0; round < 60; ++round) {
    GovFixture fx;
    int n = 2 + static_cast<int>(rng() % 10);
    Plan plan;
    for (int i = 0; i < n; ++i) {
      std::vector<std::string> deps;
      for (int j = 0; j < i; ++j)
        if (rng() % 3 == 0) deps.push_back("t" + std::to_string(j));
      plan.push_back(GovFixture::task("t" + std::to_string(i), deps));
    }
    auto result = fx.governor.schedule(plan);

    // Brute-force longest path from any root.
    std::map<std::string, int> oracle_depth;
    std::function<int(int)> depth = [&](int i) -> int {
      const auto& t = plan[i];
      auto it = oracle_depth.find(t.id);
      if (it != oracle_depth.end()) return it->second;
      int best = 0;
      for (const auto& dep : t.dependencies)
        for (int j = 0; j < n; ++j)
          if (plan[j].id == dep) best = std::max(best, depth(j) + 1);
      oracle_depth[t.id] = best;
      return best;
    };
    for (int i = 0; i < n; ++i) {
      auto layer = result.layer_of(plan[i].id);
      REQUIRE(layer.has_value());
      CHECK(static_cast<int>(*layer) == depth(i));
    }
  }
}

TEST_CASE("schedule rejects cyclic plans") {
  GovFixture fx;
  Plan plan = {GovFixture::task("a", {"b"}), GovFixture::task("b", {"a"})};
  CHECK_THROWS_AS(fx.governor.schedule(plan), UsageError);
}

TEST_CASE("tasks over the remaining budget defer with a reason, "
          "transitively") {
  GovFixture fx(10);
  Plan plan = {GovFixture::task("small", {}, 4),
               GovFixture::task("huge", {}, 100),
               GovFixture::task("child", {"huge"}, 1)};
  auto result = fx.governor.schedule(plan);
  CHECK(result.layer_of("small").has_value());
  CHECK_FALSE(result.layer_of("huge").has_value());
  CHECK_FALSE(result.layer_of("child").has_value());
  REQUIRE(result.deferred.size() == 2);
  CHECK(result.deferred[0].task_id == "huge");
  CHECK(result.deferred[1].reason.find("huge") != std::string::npos);
}

TEST_CASE("budget conservation: remaining = total - spent, never negative") {
  GovFixture fx(100);
  auto t = GovFixture::task("t1", {}, 60);
  auto r1 = fx.governor.record_outcome(t, 60, SpendOutcome::useful);
  CHECK(r1.accepted);
  CHECK(fx.governor.ledger().remaining() == doctest::Approx(40));

  auto r2 = fx.governor.record_outcome(t, 60, SpendOutcome::useful);
  CHECK_FALSE(r2.accepted); // would overdraw
  CHECK(fx.governor.ledger().remaining() == doctest::Approx(40));
  CHECK(fx.governor.ledger().spent() <= fx.governor.ledger().total_units);
}

TEST_CASE("a wasteful 54-unit spend with a declared 10-unit proxy registers "
          "a sanity check and a harness-update event") {
  GovFixture fx(200);
  auto pilot = GovFixture::task("caching-pilot", {}, 54);
  pilot.proxy_check = ProxyCheck{10, "caching", TaskScale::full};

  fs::path log = fx.ws.ensure_iteration_dir(0) / "pilot-log.json";
  write_json_file(log, json{{"overhead", 15.2}});
  auto evidence = fx.ws.register_artifact(log, ArtifactKind::run_log,
                                          "experimenter", 0);

  auto result = fx.governor.record_outcome(pilot, 54, SpendOutcome::wasteful,
                                           {"artifact:" + evidence.id});
  REQUIRE(result.registered_check.has_value());
  CHECK(result.registered_check->cost_units == doctest::Approx(10));

  bool harness_event = false;
  for (const auto& e : fx.ws.events())
    if (e.kind == EventKind::harness_update &&
        e.payload.value("update", std::string{}) == "sanity-check")
      harness_event = true;
  CHECK(harness_event);

  // Sanity check precedes the guarded task in every later schedule.
  Plan plan = {GovFixture::task("caching-full", {}, 100, TaskScale::full)};
  auto schedule = fx.governor.schedule(plan);
  auto check_layer = schedule.layer_of(result.registered_check->id);
  auto task_layer = schedule.layer_of("caching-full");
  REQUIRE(check_layer.has_value());
  REQUIRE(task_layer.has_value());
  CHECK(*check_layer < *task_layer);
}

TEST_CASE("a useful outcome changes no policy") {
  GovFixture fx(200);
  auto t = GovFixture::task("t1", {}, 10);
  t.proxy_check = ProxyCheck{2, "t1", TaskScale::full};
  auto result = fx.governor.record_outcome(t, 10, SpendOutcome::useful);
  CHECK(result.accepted);
  CHECK_FALSE(result.registered_check.has_value());
  CHECK(fx.governor.ledger().sanity_checks.empty());
}

TEST_CASE("repeated wasteful outcomes register exactly one check") {
  GovFixture fx(500);
  auto t = GovFixture::task("caching-pilot", {}, 50);
  t.proxy_check = ProxyCheck{10, "caching", TaskScale::full};
  for (int i = 0; i < 3; ++i)
    fx.governor.record_outcome(t, 50, SpendOutcome::wasteful);
  CHECK(fx.governor.ledger().sanity_checks.size() == 1);
}

TEST_CASE("the ledger survives reopen") {
  TempDir tmp;
  std::string check_id;
  {
    Workspace ws = Workspace::init(tmp.sub("ws"));
    ResourceGovernor governor(ws);
    governor.set_total(100);
    auto t = GovFixture::task("pilot", {}, 30);
    t.proxy_check = ProxyCheck{5, "pilot", TaskScale::full};
    auto r = governor.record_outcome(t, 30, SpendOutcome::wasteful);
    check_id = r.registered_check->id;
  }
  Workspace ws = Workspace::open(tmp.sub("ws"));
  ResourceGovernor governor(ws);
  CHECK(governor.ledger().total_units == doctest::Approx(100));
  CHECK(governor.ledger().spent() == doctest::Approx(30));
  REQUIRE(governor.ledger().sanity_checks.size() == 1);
  CHECK(governor.ledger().sanity_checks[0].id == check_id);
}
