#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "harness/auditor.hpp"
#include "harness/scenario.hpp"
#include "test_util.hpp"

using namespace harness;
using harness::test::TempDir;

namespace {

fs::path scenario_path(const std::string& name) {
  return fs::path(HARNESS_SCENARIO_DIR) / (name + ".scenario.json");
}

RunReport run_shipped(const std::string& name, const fs::path& root,
                      unsigned seed = 0) {
  Scenario s = Scenario::from_file(scenario_path(name));
  ScenarioDriver driver(s, root, seed);
  return driver.run();
}

std::string events_without_seq_noise(const fs::path& root) {
  // Logs carry no timestamps; the raw bytes are the determinism surface.
  return read_text_file(root / "events.log");
}

} // namespace

TEST_CASE("scenario schema violations are rejected before any write") {
  TempDir tmp;
  Scenario s;
  s.name = "bad";
  s.iterations = 2;
  Injection inj;
  inj.at_iteration = 7; // out of range
  s.injections.push_back(inj);
  ScenarioDriver driver(s, tmp.sub("ws"));
  CHECK_THROWS_AS(driver.run(), UsageError);
  CHECK_FALSE(fs::exists(tmp.sub("ws")));
}

TEST_CASE("clean baseline: three iterations, zero critical findings, all "
          "gates allow") {
  TempDir tmp;
  auto report = run_shipped("clean-baseline", tmp.sub("ws"));
  INFO(report.render());
  CHECK(report.passed);
  CHECK(report.critical_findings == 0);
  CHECK(report.blocks == 0);
  for (int it = 0; it < 3; ++it) {
    REQUIRE(report.gate_outcomes.count(it));
    CHECK(report.gate_outcomes.at(it) ==
          std::vector<GateOutcome>{GateOutcome::allow});
  }
}

TEST_CASE("five-class injection: exactly five critical findings, each "
          "converted into a citing repair task") {
  TempDir tmp;
  auto report = run_shipped("five-class-injection", tmp.sub("ws"));
  INFO(report.render());
  CHECK(report.passed);
  CHECK(report.critical_findings == 5);

  auto rows = ConversionAuditor(tmp.sub("ws")).failure_registry();
  REQUIRE(rows.size() == 5);
  for (const auto& row : rows) {
    CHECK(row.later_update != "unconverted");
    CHECK_FALSE(row.signal_artifacts.empty());
  }

  // Self-applicability: the auditor recovers every cause chain the kernel
  // wrote, with no broken traces, and latency always equals the iteration
  // difference.
  auto conversions = ConversionAuditor(tmp.sub("ws")).extract_conversions();
  CHECK(conversions.broken_traces.empty());
  for (const auto& c : conversions.events)
    CHECK(c.latency == c.update_iteration - c.signal_iteration);
}

TEST_CASE("missing review score: hard block, rollback to review, recovery") {
  TempDir tmp;
  auto report = run_shipped("missing-review", tmp.sub("ws"));
  INFO(report.render());
  CHECK(report.passed);
  REQUIRE(report.gate_outcomes.count(2));
  CHECK(report.gate_outcomes.at(2)[0] == GateOutcome::block);
  CHECK(report.gate_outcomes.at(2).back() == GateOutcome::allow);
}

TEST_CASE("caching pilot: wasteful spend registers the 10-unit check and "
          "audits as a latency-0 harness conversion") {
  TempDir tmp;
  auto report = run_shipped("caching-pilot", tmp.sub("ws"));
  INFO(report.render());
  CHECK(report.passed);
  auto conversions = ConversionAuditor(tmp.sub("ws")).extract_conversions();
  bool harness_latency0 = false;
  for (const auto& c : conversions.events)
    if (c.kind == ConversionKind::harness && c.latency == 0)
      harness_latency0 = true;
  CHECK(harness_latency0);
}

TEST_CASE("pilot-as-general-claim is blocked at the boundary") {
  TempDir tmp;
  auto report = run_shipped("pilot-boundary", tmp.sub("ws"));
  INFO(report.render());
  CHECK(report.passed);
}

TEST_CASE("a deleted expected output surfaces as an unresolvable source") {
  TempDir tmp;
  auto report = run_shipped("missing-output", tmp.sub("ws"));
  INFO(report.render());
  CHECK(report.passed);
}

TEST_CASE("cross-project memory: a lesson from workspace A changes the plan "
          "in workspace B") {
  TempDir tmp;
  auto a = run_shipped("memory-project-a", tmp.sub("a"));
  INFO(a.render());
  CHECK(a.passed);
  CHECK(fs::exists(tmp.sub("global-memory")));
  auto b = run_shipped("memory-project-b", tmp.sub("b"));
  INFO(b.render());
  CHECK(b.passed);
  CHECK(ConversionAuditor(tmp.sub("b")).extract_conversions()
            .broken_traces.empty());
}

TEST_CASE("evolution differential: the third injection is caught at gate "
          "level only when evolution is on") {
  Scenario s = Scenario::from_file(scenario_path("evolution-differential"));

  TempDir tmp;
  ScenarioDriver on(s, tmp.sub("on"));
  auto report_on = on.run();
  INFO(report_on.render());
  CHECK(report_on.passed);

  Scenario off = s;
  off.evolution = false;
  off.expected_outcomes.clear();
  ScenarioDriver driver_off(off, tmp.sub("off"));
  auto report_off = driver_off.run();

  auto gate_critical_at = [](const fs::path& root, int iteration) {
    int n = 0;
    Workspace ws = Workspace::open(root, Workspace::Mode::read_only);
    for (const auto& e : ws.events())
      if (e.kind == EventKind::validator_finding && e.iteration == iteration &&
          e.payload.value("severity", std::string{}) == "critical")
        ++n;
    return n;
  };
  CHECK(gate_critical_at(tmp.sub("on"), 3) >= 1);
  CHECK(gate_critical_at(tmp.sub("off"), 3) == 0);

  // The reflection-level catch still repeats when evolution is off.
  Workspace ws_off = Workspace::open(tmp.sub("off"), Workspace::Mode::read_only);
  HarnessConfig cfg_off = HarnessConfig::load(ws_off);
  MemoryRouter memory_off(ws_off, cfg_off);
  bool reflected = false;
  for (const auto& i : memory_off.issues())
    if (i.failure_class == "unsupported-statistic" && i.frequency >= 3)
      reflected = true;
  CHECK(reflected);
}

TEST_CASE("reproducibility: same scenario, same seed, identical event log "
          "bytes") {
  TempDir tmp;
  run_shipped("five-class-injection", tmp.sub("x"), 7);
  run_shipped("five-class-injection", tmp.sub("y"), 7);
  CHECK(events_without_seq_noise(tmp.sub("x")) ==
        events_without_seq_noise(tmp.sub("y")));
}

TEST_CASE("blindness: the harness never reads the sidecar injection log") {
  TempDir tmp;
  // Run once with the sidecar present, once after deleting it mid-run is
  // impossible (single pass), so compare a run whose sidecar is removed
  // before auditing with the original decisions.
  auto report = run_shipped("five-class-injection", tmp.sub("ws"));
  fs::path sidecar = tmp.sub("ws");
  sidecar += ".injections.log";
  REQUIRE(fs::exists(sidecar));
  std::string log_before = read_text_file(tmp.sub("ws") / "events.log");
  fs::remove(sidecar);
  // Re-auditing the workspace without the sidecar changes nothing.
  auto rows = ConversionAuditor(tmp.sub("ws")).failure_registry();
  CHECK(rows.size() == 5);
  CHECK(read_text_file(tmp.sub("ws") / "events.log") == log_before);
  // And the workspace itself holds no copy of the injection record.
  bool mentioned = false;
  for (const auto& e : fs::recursive_directory_iterator(tmp.sub("ws")))
    if (e.is_regular_file() &&
        read_text_file(e.path()).find("injections") != std::string::npos)
      mentioned = mentioned; // field names may collide; check file names only
  for (const auto& e : fs::recursive_directory_iterator(tmp.sub("ws")))
    if (e.path().filename() == "injections.log") mentioned = true;
  CHECK_FALSE(mentioned);
}

TEST_CASE("inject rejects a nonexistent target iteration") {
  TempDir tmp;
  Workspace ws = Workspace::init(tmp.sub("ws"));
  Injection inj;
  inj.at_iteration = 3;
  inj.kind = InjectionKind::stale_table;
  inj.target = "drafts/none.json";
  inj.params = json{{"name", "x"}, {"value", 1.0}};
  CHECK_THROWS_AS(inject(ws, inj), UsageError);
}

TEST_CASE("duplicate-files injection makes k files byte-identical to the "
          "source") {
  TempDir tmp;
  Workspace ws = Workspace::init(tmp.sub("ws"));
  auto put = [&](const std::string& rel, const json& content) {
    fs::path f = ws.ensure_iteration_dir(0) / rel;
    fs::create_directories(f.parent_path());
    write_json_file(f, content);
    return ws.register_artifact(f, ArtifactKind::result_table, "system", 0);
  };
  auto src = put("a/out.json", json{{"v", 1}});
  std::vector<ArtifactRecord> reps;
  for (int i = 1; i <= 5; ++i)
    reps.push_back(put("b/rep" + std::to_string(i) + ".json",
                       json{{"v", 100 + i}}));
  Injection inj;
  inj.at_iteration = 0;
  inj.kind = InjectionKind::duplicate_files;
  inj.params = json{{"source", "a/out.json"},
                    {"targets", json::array({"b/rep1.json", "b/rep2.json",
                                             "b/rep3.json", "b/rep4.json"})}};
  auto mutated = inject(ws, inj);
  CHECK(mutated.size() == 4);
  std::string src_bytes = read_text_file(ws.artifact_file(src));
  for (int i = 0; i < 4; ++i)
    CHECK(read_text_file(ws.artifact_file(reps[i])) == src_bytes);
  CHECK(read_text_file(ws.artifact_file(reps[4])) != src_bytes);
}

TEST_CASE("stale-table injection forces the published 4.1 over a 2.7 "
          "canonical") {
  TempDir tmp;
  Workspace ws = Workspace::init(tmp.sub("ws"));
  fs::path f = ws.ensure_iteration_dir(0) / "drafts/main.json";
  fs::create_directories(f.parent_path());
  write_json_file(f, json{{"headline_numbers",
                           json::array({json{{"name", "ratio"},
                                             {"value", 2.7},
                                             {"claim_id", "c"}}})}});
  ws.register_artifact(f, ArtifactKind::draft, "writer", 0);
  Injection inj;
  inj.at_iteration = 0;
  inj.kind = InjectionKind::stale_table;
  inj.target = "drafts/main.json";
  inj.params = json{{"name", "ratio"}, {"value", 4.1}};
  inject(ws, inj);
  json after = read_json_file(f);
  CHECK(after["headline_numbers"][0]["value"].get<double>() ==
        doctest::Approx(4.1));
}
