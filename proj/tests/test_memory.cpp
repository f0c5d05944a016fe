#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "harness/memory.hpp"
#include "test_util.hpp"

using namespace harness;
using harness::test::TempDir;

namespace {

struct MemFixture {
  TempDir tmp;
  Workspace ws;
  HarnessConfig cfg;
  MemoryRouter memory;

  explicit MemFixture(std::string global_dir = "")
      : ws(Workspace::init(tmp.sub("ws"))),
        cfg([&] {
          HarnessConfig c = HarnessConfig::defaults();
          c.memory.global_dir = std::move(global_dir);
          return c;
        }()),
        memory(ws, cfg) {
    cfg.install(ws);
  }

  ArtifactRecord reflect(const json& issues, const std::string& name = "r") {
    static int n = 0;
    fs::path file = ws.ensure_iteration_dir(ws.current_iteration()) /
                    ("reflections/" + name + std::to_string(n++) + ".json");
    fs::create_directories(file.parent_path());
    write_json_file(file, json{{"issues", issues}});
    return ws.register_artifact(file, ArtifactKind::reflection, "supervisor",
                                ws.current_iteration());
  }

  void advance_iteration(int to) {
    ws.append_event({kUnsetSeq, to, StageId::planning, EventKind::stage_start});
  }
};

json issue_entry(const std::string& category, const std::string& cls,
                 const std::string& severity = "major") {
  return json{{"category", category},
              {"failure_class", cls},
              {"severity", severity},
              {"suggested_action", "fix " + cls}};
}

} // namespace

TEST_CASE("a reflection with 3 experiment and 1 writing issue yields 4 "
          "records with the right categories") {
  MemFixture fx;
  auto a = fx.reflect(json::array({issue_entry("experiment", "oom"),
                                   issue_entry("experiment", "seed-drift"),
                                   issue_entry("experiment", "slow-io"),
                                   issue_entry("writing", "stale-claims")}));
  auto issues = fx.memory.normalize(a);
  REQUIRE(issues.size() == 4);
  int experiment = 0, writing = 0;
  for (const auto& i : issues) {
    if (i.category == IssueCategory::experiment) ++experiment;
    if (i.category == IssueCategory::writing) ++writing;
    CHECK(i.frequency == 1);
    CHECK_FALSE(i.source_refs.empty());
  }
  CHECK(experiment == 3);
  CHECK(writing == 1);
}

TEST_CASE("recurrence merges by (category, failure class): grouping oracle") {
  MemFixture fx;
  // Stream of entries with repeats; oracle groups by key.
  std::vector<std::pair<std::string, std::string>> stream = {
      {"experiment", "oom"},    {"writing", "stale"}, {"experiment", "oom"},
      {"experiment", "drift"},  {"writing", "stale"}, {"experiment", "oom"},
      {"analysis", "p-hacking"}};
  std::map<std::pair<std::string, std::string>, int> oracle;
  for (const auto& [cat, cls] : stream) {
    auto a = fx.reflect(json::array({issue_entry(cat, cls)}));
    fx.memory.normalize(a);
    oracle[{cat, cls}]++;
  }
  CHECK(fx.memory.issues().size() == oracle.size());
  for (const auto& issue : fx.memory.issues()) {
    auto key = std::make_pair(to_string(issue.category), issue.failure_class);
    CHECK(issue.frequency == oracle.at(key));
  }
}

TEST_CASE("unknown categories are coerced to the closest one and logged") {
  MemFixture fx;
  auto a = fx.reflect(json::array({issue_entry("experimnt", "typo-cat")}));
  auto issues = fx.memory.normalize(a);
  REQUIRE(issues.size() == 1);
  CHECK(issues[0].category == IssueCategory::experiment);
  bool logged = false;
  for (const auto& e : fx.ws.events())
    if (e.kind == EventKind::task_update &&
        e.payload.value("note", std::string{}) == "category coerced")
      logged = true;
  CHECK(logged);
}

TEST_CASE("routing: experiment -> experimenter+planner, analysis -> "
          "supervisor+critic, writing -> writer+editor") {
  MemFixture fx;
  auto a = fx.reflect(json::array({issue_entry("experiment", "oom"),
                                   issue_entry("analysis", "leakage"),
                                   issue_entry("writing", "overclaim")}));
  auto issues = fx.memory.normalize(a);
  std::map<std::string, std::set<RoleId>> got;
  for (const auto& issue : issues)
    for (const auto& overlay : fx.memory.route(issue))
      got[issue.failure_class].insert(overlay.role);
  CHECK(got["oom"] == std::set<RoleId>{RoleId::experimenter, RoleId::planner});
  CHECK(got["leakage"] == std::set<RoleId>{RoleId::supervisor, RoleId::critic});
  CHECK(got["overclaim"] == std::set<RoleId>{RoleId::writer, RoleId::editor});
}

TEST_CASE("efficiency issues route to the scheduler per the default table") {
  MemFixture fx;
  auto a = fx.reflect(json::array({issue_entry("efficiency", "waste")}));
  auto overlays = fx.memory.route(fx.memory.normalize(a)[0]);
  REQUIRE(overlays.size() == 1);
  CHECK(overlays[0].role == RoleId::scheduler);
}

TEST_CASE("routing table is total over every category") {
  HarnessConfig cfg = HarnessConfig::defaults();
  CHECK_NOTHROW(cfg.routing.validate_total());
  cfg.routing.routes.erase(IssueCategory::efficiency);
  CHECK_THROWS_AS(cfg.routing.validate_total(), UsageError);
}

TEST_CASE("decay follows the closed-form half-life curve") {
  MemFixture fx;
  auto a = fx.reflect(json::array({issue_entry("experiment", "oom")}));
  auto issue = fx.memory.normalize(a)[0];
  auto overlays = fx.memory.route(issue);
  REQUIRE_FALSE(overlays.empty());

  // Fresh overlay: relevance 1.0.
  auto now = fx.memory.overlays_for(RoleId::experimenter, 0);
  REQUIRE(now.size() == 1);
  CHECK(now[0].relevance == doctest::Approx(1.0));

  // halflife 4 (default): after 4 iterations relevance is 0.5.
  auto later = fx.memory.overlays_for(RoleId::experimenter, 4);
  REQUIRE(later.size() == 1);
  CHECK(later[0].relevance == doctest::Approx(0.5));

  // With halflife 2 and 2 iterations elapsed, 0.5 clears a 0.25 threshold.
  MemFixture fx2;
  fx2.cfg.memory.decay_halflife = 2.0;
  MemoryRouter memory2(fx2.ws, fx2.cfg);
  auto a2 = fx2.reflect(json::array({issue_entry("experiment", "oom")}));
  memory2.route(memory2.normalize(a2)[0]);
  auto two_later = memory2.overlays_for(RoleId::experimenter, 2);
  REQUIRE(two_later.size() == 1);
  CHECK(two_later[0].relevance == doctest::Approx(0.5));

  // Below the threshold the overlay is filtered out entirely.
  CHECK(fx.memory.overlays_for(RoleId::experimenter, 100).empty());
}

TEST_CASE("decay is monotone without reinforcement") {
  MemFixture fx;
  auto a = fx.reflect(json::array({issue_entry("experiment", "oom")}));
  fx.memory.route(fx.memory.normalize(a)[0]);
  double prev = 2.0;
  for (int iter = 0; iter < 8; ++iter) {
    auto overlays = fx.memory.overlays_for(RoleId::experimenter, iter);
    if (overlays.empty()) break;
    CHECK(overlays[0].relevance <= prev);
    prev = overlays[0].relevance;
  }
}

TEST_CASE("an addressed issue re-opens when its failure class recurs and "
          "its overlays reset to full relevance") {
  MemFixture fx;
  auto a = fx.reflect(json::array({issue_entry("experiment", "oom")}));
  auto issue = fx.memory.normalize(a)[0];
  fx.memory.route(issue);
  fx.memory.close_issue(issue.id);
  CHECK(fx.memory.find_issue(issue.id)->status == IssueStatus::addressed);

  fx.advance_iteration(5);
  auto again = fx.reflect(json::array({issue_entry("experiment", "oom")}));
  fx.memory.normalize(again);
  CHECK(fx.memory.find_issue(issue.id)->status == IssueStatus::reopened);
  auto overlays = fx.memory.overlays_for(RoleId::experimenter, 5);
  REQUIRE_FALSE(overlays.empty());
  CHECK(overlays[0].relevance == doctest::Approx(1.0));
}

TEST_CASE("overlays sort by decayed relevance") {
  MemFixture fx;
  auto a = fx.reflect(json::array({issue_entry("experiment", "old-issue")}));
  fx.memory.route(fx.memory.normalize(a)[0]);
  fx.advance_iteration(3);
  auto b = fx.reflect(json::array({issue_entry("experiment", "new-issue")}));
  fx.memory.route(fx.memory.normalize(b)[0]);
  auto overlays = fx.memory.overlays_for(RoleId::experimenter, 3);
  REQUIRE(overlays.size() == 2);
  CHECK(overlays[0].lesson.find("new-issue") != std::string::npos);
  CHECK(overlays[0].relevance >= overlays[1].relevance);
}

TEST_CASE("digest counts records per category") {
  MemFixture fx;
  auto a = fx.reflect(json::array({issue_entry("experiment", "a"),
                                   issue_entry("experiment", "b"),
                                   issue_entry("writing", "c"),
                                   issue_entry("experiment", "a")}));
  fx.memory.normalize(a);
  auto digest = fx.memory.digest();
  CHECK(digest[IssueCategory::experiment] == 2); // patterns, not occurrences
  CHECK(digest[IssueCategory::writing] == 1);
  CHECK(digest[IssueCategory::system] == 0);
}

TEST_CASE("issues recurring twice reach the shared global store and another "
          "workspace imports them") {
  TempDir shared;
  fs::path global = shared.sub("global-memory");
  {
    MemFixture a(global.string());
    auto r1 = a.reflect(json::array({issue_entry("experiment", "gpu-oom")}));
    a.memory.normalize(r1);
    CHECK_FALSE(fs::exists(global / "experiment--gpu-oom.json"));
    auto r2 = a.reflect(json::array({issue_entry("experiment", "gpu-oom")}));
    a.memory.normalize(r2); // frequency 2 -> global
    CHECK(fs::exists(global / "experiment--gpu-oom.json"));
  }
  MemFixture b(global.string());
  auto imported = b.memory.sync_global();
  REQUIRE(imported.size() == 1);
  CHECK(imported[0].failure_class == "gpu-oom");
  auto overlays = b.memory.overlays_for(RoleId::planner, 0);
  REQUIRE_FALSE(overlays.empty());
  CHECK(overlays[0].lesson.find("gpu-oom") != std::string::npos);
}
