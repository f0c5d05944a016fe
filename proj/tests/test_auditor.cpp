#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "harness/auditor.hpp"
#include "harness/sha256.hpp"
#include "test_util.hpp"

using namespace harness;
using harness::test::TempDir;

namespace {

// Tree hash for the read-only invariant.
std::string tree_hash(const fs::path& root) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::string acc;
  for (const auto& f : files)
    acc += f.lexically_relative(root).generic_string() + ":" +
           sha256_file(f) + "\n";
  return sha256_hex(acc);
}

void put_review_row(Workspace& ws, const std::string& project, int iteration,
                    double score, int high_sev, int focus) {
  fs::path dir = ws.ensure_iteration_dir(iteration);
  json issues = json::array();
  for (int i = 0; i < high_sev; ++i)
    issues.push_back(json{{"severity", "high"}});
  write_json_file(dir / ("review-" + project + ".json"),
                  json{{"project", project},
                       {"score", score},
                       {"issues", issues}});
  ws.register_artifact(dir / ("review-" + project + ".json"),
                       ArtifactKind::review, "supervisor", iteration);
  json items = json::array();
  for (int i = 0; i < focus; ++i) items.push_back("item");
  write_json_file(dir / ("action-" + project + ".json"),
                  json{{"project", project}, {"focus_items", items}});
  ws.register_artifact(dir / ("action-" + project + ".json"),
                       ArtifactKind::action_plan, "supervisor", iteration);
}

} // namespace

TEST_CASE("random logs: transition counts equal a naive pairwise scan") {
  std::mt19937 rng(1234);
  for (int round = 0; round < 30; ++round) {
    TempDir tmp;
    Workspace ws = Workspace::init(tmp.sub("ws"));
    std::vector<StageId> stages = all_stages();
    int n = 1 + static_cast<int>(rng() % 60);
    std::vector<StageId> sequence;
    for (int i = 0; i < n; ++i)
      sequence.push_back(stages[rng() % stages.size()]);
    for (StageId s : sequence) {
      ws.append_event({kUnsetSeq, 0, s, EventKind::stage_start});
      ws.append_event({kUnsetSeq, 0, s, EventKind::stage_end});
    }

    std::map<std::pair<StageGroup, StageGroup>, int> oracle;
    for (std::size_t i = 0; i + 1 < sequence.size(); ++i)
      oracle[{stage_group(sequence[i]), stage_group(sequence[i + 1])}]++;

    ConversionAuditor auditor(tmp.sub("ws"));
    auto matrix = auditor.transition_matrix();
    CHECK(matrix.counts == oracle);
  }
}

TEST_CASE("a single-stage log yields an empty matrix") {
  TempDir tmp;
  Workspace ws = Workspace::init(tmp.sub("ws"));
  ws.append_event({kUnsetSeq, 0, StageId::writing, EventKind::stage_start});
  ws.append_event({kUnsetSeq, 0, StageId::writing, EventKind::stage_end});
  ConversionAuditor auditor(tmp.sub("ws"));
  CHECK(auditor.transition_matrix().total() == 0);
}

TEST_CASE("an empty workspace yields zero conversions") {
  TempDir tmp;
  Workspace::init(tmp.sub("ws"));
  ConversionAuditor auditor(tmp.sub("ws"));
  auto report = auditor.extract_conversions();
  CHECK(report.events.empty());
  CHECK(report.summary.count == 0);
}

TEST_CASE("a signal at iteration 8 cited from iteration 11 has latency 3") {
  TempDir tmp;
  Workspace ws = Workspace::init(tmp.sub("ws"));
  ws.append_event({kUnsetSeq, 8, StageId::quality_gate, EventKind::stage_start});
  ws.append_event({kUnsetSeq, 8, StageId::quality_gate,
                   EventKind::validator_finding,
                   json{{"id", "f-1"},
                        {"validator", "stale-number"},
                        {"failure_class", "stale-number"},
                        {"severity", "critical"},
                        {"offending_artifacts", json::array()}}});
  ws.append_event({kUnsetSeq, 11, StageId::planning, EventKind::stage_start});
  ws.append_event({kUnsetSeq, 11, StageId::planning, EventKind::task_update,
                   json{{"action", "plan-mutation"}},
                   {}, {"finding:f-1"}});
  ConversionAuditor auditor(tmp.sub("ws"));
  auto report = auditor.extract_conversions();
  REQUIRE(report.events.size() == 1);
  CHECK(report.events[0].latency == 3);
  CHECK(report.events[0].kind == ConversionKind::behavior);
}

TEST_CASE("an update citing an unresolvable signal is a broken trace, not "
          "a guess") {
  TempDir tmp;
  Workspace ws = Workspace::init(tmp.sub("ws"));
  ws.append_event({kUnsetSeq, 0, StageId::planning, EventKind::task_update,
                   json{{"action", "plan-mutation"}},
                   {}, {"finding:f-never-logged"}});
  ConversionAuditor auditor(tmp.sub("ws"));
  auto report = auditor.extract_conversions();
  CHECK(report.events.empty());
  REQUIRE(report.broken_traces.size() == 1);
  CHECK(report.broken_traces[0].find("f-never-logged") != std::string::npos);
}

TEST_CASE("a critical finding with no citing update is flagged unconverted") {
  TempDir tmp;
  Workspace ws = Workspace::init(tmp.sub("ws"));
  ws.append_event({kUnsetSeq, 0, StageId::quality_gate,
                   EventKind::validator_finding,
                   json{{"id", "f-orphan"},
                        {"validator", "ci-inversion"},
                        {"failure_class", "ci-inversion"},
                        {"severity", "critical"},
                        {"offending_artifacts", json::array({"a-000001"})}}});
  ConversionAuditor auditor(tmp.sub("ws"));
  auto rows = auditor.failure_registry();
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].later_update == "unconverted");
}

TEST_CASE("clean workspaces have an empty failure registry") {
  TempDir tmp;
  Workspace::init(tmp.sub("ws"));
  ConversionAuditor auditor(tmp.sub("ws"));
  CHECK(auditor.failure_registry().empty());
}

TEST_CASE("movement threshold: |delta| = 0.25 is flat, 0.26 moves") {
  for (double delta : {0.0, 0.1, 0.25, -0.25, 0.26, -0.26, 1.0, -1.0}) {
    TempDir tmp;
    Workspace ws = Workspace::init(tmp.sub("ws"));
    ws.append_event({kUnsetSeq, 1, StageId::review, EventKind::stage_start});
    put_review_row(ws, "p", 0, 6.0, 1, 1);
    put_review_row(ws, "p", 1, 6.0 + delta, 1, 1);
    ConversionAuditor auditor(tmp.sub("ws"));
    auto report = auditor.review_to_action();
    REQUIRE(report.rows.size() == 2);
    const auto& row = report.rows[1];
    std::string expected = std::abs(delta) <= 0.25 ? "flat"
                           : delta < 0             ? "down"
                                                   : "up";
    CHECK(row.movement == expected);
  }
}

TEST_CASE("identical consecutive scores are flat; the first scored row has "
          "no prior") {
  TempDir tmp;
  Workspace ws = Workspace::init(tmp.sub("ws"));
  ws.append_event({kUnsetSeq, 1, StageId::review, EventKind::stage_start});
  put_review_row(ws, "p", 0, 6.5, 2, 3);
  put_review_row(ws, "p", 1, 6.5, 2, 3);
  ConversionAuditor auditor(tmp.sub("ws"));
  auto report = auditor.review_to_action();
  REQUIRE(report.rows.size() == 2);
  CHECK(report.rows[0].movement == "no-prior");
  CHECK(report.rows[1].movement == "flat");
  CHECK(*report.rows[1].delta == doctest::Approx(0.0));
}

TEST_CASE("task classification follows the keyword table, one primary "
          "category each") {
  CHECK(classify_task_category("run ablation experiment 3") ==
        "experiment/control");
  CHECK(classify_task_category("validate result consistency") ==
        "validation/artifact");
  CHECK(classify_task_category("extend telemetry coverage") ==
        "harness/system");
  CHECK(classify_task_category("narrow claim scope") == "claim/writing");
  CHECK(classify_task_category("tidy notebook folder") == "other");
  // Repair work leads with validation even when it mentions a run.
  CHECK(classify_task_category("run source-to-paper validation") ==
        "validation/artifact");
}

TEST_CASE("auditing mutates nothing: the workspace tree hash is unchanged") {
  TempDir tmp;
  Workspace ws = Workspace::init(tmp.sub("ws"));
  ws.append_event({kUnsetSeq, 3, StageId::review, EventKind::stage_start});
  put_review_row(ws, "p", 3, 6.0, 2, 2);
  ws.append_event({kUnsetSeq, 3, StageId::review, EventKind::validator_finding,
                   json{{"id", "f-1"},
                        {"validator", "stale-number"},
                        {"failure_class", "stale-number"},
                        {"severity", "critical"},
                        {"offending_artifacts", json::array({"a-000001"})}}});
  std::string before = tree_hash(tmp.sub("ws"));
  ConversionAuditor auditor(tmp.sub("ws"));
  auditor.extract_conversions();
  auditor.transition_matrix();
  auditor.review_to_action();
  auditor.failure_registry();
  CHECK(tree_hash(tmp.sub("ws")) == before);
}
