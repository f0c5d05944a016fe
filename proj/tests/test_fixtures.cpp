#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "harness/auditor.hpp"
#include "harness/fixtures.hpp"
#include "harness/memory.hpp"
#include "test_util.hpp"

using namespace harness;
using harness::test::TempDir;

TEST_CASE("build_fixtures refuses a non-empty output directory") {
  TempDir tmp;
  harness::test::write_file(tmp.sub("out") / "stray", "x");
  CHECK_THROWS_AS(build_fixtures(tmp.sub("out")), UsageError);
}

TEST_CASE("conversion fixture: latency multiset {0,0,0,1,1,1,1,3}") {
  TempDir tmp;
  auto manifest = build_conversion_fixture(tmp.sub("fx"));
  ConversionAuditor auditor(tmp.sub("fx"));
  auto report = auditor.extract_conversions();
  CHECK(report.broken_traces.empty());
  REQUIRE(report.events.size() == 8);
  std::multiset<int> latencies;
  for (const auto& e : report.events) latencies.insert(e.latency);
  CHECK(latencies == std::multiset<int>{0, 0, 0, 1, 1, 1, 1, 3});
  CHECK(report.summary.median_latency == 1);
  CHECK(report.summary.max_latency == 3);
  CHECK(manifest.expected["count"] == 8);
}

TEST_CASE("conversion fixture: kinds and harness-function tags match the "
          "manifest") {
  TempDir tmp;
  auto manifest = build_conversion_fixture(tmp.sub("fx"));
  ConversionAuditor auditor(tmp.sub("fx"));
  auto report = auditor.extract_conversions();

  auto signature = [](const std::string& kind, int latency,
                      const std::vector<std::string>& tags) {
    std::string s = kind + "/" + std::to_string(latency) + "/";
    for (const auto& t : tags) s += t + ",";
    return s;
  };
  std::multiset<std::string> got, want;
  for (const auto& e : report.events) {
    std::vector<std::string> tags;
    for (auto h : e.harness_functions) tags.push_back(to_string(h));
    std::sort(tags.begin(), tags.end());
    got.insert(signature(to_string(e.kind), e.latency, tags));
  }
  for (const auto& e : manifest.expected["events"]) {
    std::vector<std::string> tags;
    for (const auto& t : e["harness_functions"]) tags.push_back(t);
    std::sort(tags.begin(), tags.end());
    want.insert(signature(e["kind"], e["latency"], tags));
  }
  CHECK(got == want);
}

TEST_CASE("failure fixture: five critical rows, all converted") {
  TempDir tmp;
  build_failure_fixture(tmp.sub("fx"));
  ConversionAuditor auditor(tmp.sub("fx"));
  auto rows = auditor.failure_registry();
  REQUIRE(rows.size() == 5);
  std::set<std::string> classes;
  for (const auto& r : rows) {
    classes.insert(r.failure_class);
    CHECK(r.later_update != "unconverted");
    CHECK(r.latency == 1);
    CHECK_FALSE(r.signal_artifacts.empty());
  }
  CHECK(classes == std::set<std::string>{
                       "duplicate-results", "ci-inversion", "stale-number",
                       "manifest-mismatch", "unsupported-statistic"});
}

TEST_CASE("transition fixture: 1,853 stage ends and the eleven published "
          "pair counts") {
  TempDir tmp;
  build_transition_fixture(tmp.sub("fx"));
  ConversionAuditor auditor(tmp.sub("fx"));

  int stage_ends = 0;
  for (const auto& e : auditor.workspace().events())
    if (e.kind == EventKind::stage_end) ++stage_ends;
  CHECK(stage_ends == 1853);

  auto matrix = auditor.transition_matrix();
  using G = StageGroup;
  CHECK(matrix.at(G::writing, G::writing) == 405);
  CHECK(matrix.at(G::experiment, G::experiment) == 271);
  CHECK(matrix.at(G::review, G::harness) == 217);
  CHECK(matrix.at(G::harness, G::experiment) == 124);
  CHECK(matrix.at(G::harness, G::review) == 109);
  CHECK(matrix.at(G::writing, G::review) == 90);
  CHECK(matrix.at(G::harness, G::validation) == 90);
  CHECK(matrix.at(G::experiment, G::validation) == 85);
  CHECK(matrix.at(G::validation, G::harness) == 85);
  CHECK(matrix.at(G::validation, G::experiment) == 78);
  CHECK(matrix.at(G::review, G::experiment) == 76);
  CHECK(matrix.total() == 1852); // every adjacent (end, start) pair
}

TEST_CASE("review fixture: 10/6/10/11 rows with the published means") {
  TempDir tmp;
  build_review_fixture(tmp.sub("fx"));
  ConversionAuditor auditor(tmp.sub("fx"));
  auto report = auditor.review_to_action();
  CHECK(report.rows.size() == 37);

  const auto& down = report.by_movement.at("down");
  CHECK(down.rows == 10);
  CHECK(down.mean_delta == doctest::Approx(-0.82).epsilon(1e-9));
  CHECK(down.mean_high_severity == doctest::Approx(8.7).epsilon(1e-9));
  CHECK(down.mean_focus_items == doctest::Approx(8.4).epsilon(1e-9));
  CHECK(down.visible_plans == 7);
  CHECK(down.task_mix.at("experiment/control") == 56);
  CHECK(down.task_mix.at("validation/artifact") == 17);
  CHECK(down.task_mix.at("harness/system") == 13);
  CHECK(down.task_mix.at("claim/writing") == 1);
  CHECK(down.task_mix.at("other") == 1);

  const auto& flat = report.by_movement.at("flat");
  CHECK(flat.rows == 6);
  CHECK(flat.mean_delta == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(flat.mean_high_severity == doctest::Approx(6.5).epsilon(1e-9));
  CHECK(flat.mean_focus_items == doctest::Approx(5.8).epsilon(1e-9));

  const auto& up = report.by_movement.at("up");
  CHECK(up.rows == 10);
  CHECK(up.mean_delta == doctest::Approx(0.70).epsilon(1e-9));
  CHECK(up.mean_high_severity == doctest::Approx(4.0).epsilon(1e-9));

  const auto& noprior = report.by_movement.at("no-prior");
  CHECK(noprior.rows == 11);
  CHECK(noprior.mean_high_severity == doctest::Approx(3.8).epsilon(1e-9));
  CHECK(noprior.mean_focus_items == doctest::Approx(5.9).epsilon(1e-9));
  CHECK(noprior.visible_plans == 8);
}

TEST_CASE("digest fixture: 416 recurring issue patterns in the published "
          "category split") {
  TempDir tmp;
  build_digest_fixture(tmp.sub("fx"));
  Workspace ws = Workspace::open(tmp.sub("fx"), Workspace::Mode::read_only);
  HarnessConfig cfg = HarnessConfig::load(ws);
  MemoryRouter memory(const_cast<Workspace&>(ws), cfg);
  auto digest = memory.digest();
  CHECK(digest[IssueCategory::experiment] == 212);
  CHECK(digest[IssueCategory::writing] == 89);
  CHECK(digest[IssueCategory::analysis] == 84);
  CHECK(digest[IssueCategory::system] == 20);
  CHECK(digest[IssueCategory::ideation] == 4);
  CHECK(digest[IssueCategory::pipeline] == 3);
  CHECK(digest[IssueCategory::planning] == 3);
  CHECK(digest[IssueCategory::efficiency] == 1);
  int total = 0;
  for (const auto& [_, n] : digest) total += n;
  CHECK(total == 416);
}

TEST_CASE("build_fixtures writes every workspace plus manifests") {
  TempDir tmp;
  auto manifests = build_fixtures(tmp.sub("out"));
  CHECK(manifests.size() == 5);
  for (const auto& m : manifests) {
    CHECK(fs::exists(tmp.sub("out") / m.name / "events.log"));
    CHECK(fs::exists(tmp.sub("out") / (m.name + ".manifest.json")));
    CHECK((m.provenance == "paper-table" || m.provenance == "constructed"));
    CHECK_FALSE(m.source_citation.empty());
  }
}
