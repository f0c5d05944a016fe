#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "harness/sha256.hpp"
#include "harness/workspace.hpp"
#include "test_util.hpp"

using namespace harness;
using harness::test::TempDir;
using harness::test::write_file;

TEST_CASE("sha256 known vectors") {
  CHECK(sha256_hex("") ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  std::string million(1000000, 'a');
  CHECK(sha256_hex(million) ==
        "cdc76e5c9914fb9281a1c7e284d73e67f1809a48a497200e046d39ccc7112cd0");
}

TEST_CASE("init creates the skeleton and the iteration-0 stage-start") {
  TempDir tmp;
  Workspace ws = Workspace::init(tmp.sub("ws"));
  CHECK(fs::exists(tmp.sub("ws") / "events.log"));
  CHECK(fs::exists(tmp.sub("ws") / "registry" / "artifacts"));
  CHECK(fs::exists(tmp.sub("ws") / "memory"));
  CHECK(fs::exists(tmp.sub("ws") / "lock"));
  REQUIRE(ws.events().size() == 1);
  CHECK(ws.events()[0].seq == 0);
  CHECK(ws.events()[0].kind == EventKind::stage_start);
  CHECK(ws.events()[0].iteration == 0);
}

TEST_CASE("init refuses a non-empty directory") {
  TempDir tmp;
  write_file(tmp.sub("ws") / "stray.txt", "x");
  CHECK_THROWS_AS(Workspace::init(tmp.sub("ws")), UsageError);
}

TEST_CASE("init then reopen yields identical state and no new events") {
  TempDir tmp;
  std::string before;
  {
    Workspace ws = Workspace::init(tmp.sub("ws"));
    before = ws.state_snapshot();
  }
  Workspace again = Workspace::open(tmp.sub("ws"));
  CHECK(again.state_snapshot() == before);
  CHECK(again.events().size() == 1);
}

TEST_CASE("two files with identical bytes share a content hash") {
  TempDir tmp;
  Workspace ws = Workspace::init(tmp.sub("ws"));
  write_file(ws.iteration_dir(0) / "a.json", "{\"v\": 1}");
  write_file(ws.iteration_dir(0) / "b.json", "{\"v\": 1}");
  auto a = ws.register_artifact(ws.iteration_dir(0) / "a.json",
                                ArtifactKind::result_table, "system", 0);
  auto b = ws.register_artifact(ws.iteration_dir(0) / "b.json",
                                ArtifactKind::result_table, "system", 0);
  CHECK(a.content_hash == b.content_hash);
  CHECK(a.id != b.id);
}

TEST_CASE("register_artifact stamps the log tail seq") {
  TempDir tmp;
  Workspace ws = Workspace::init(tmp.sub("ws"));
  for (int i = 0; i < 4; ++i)
    ws.append_event({kUnsetSeq, 0, StageId::ideation, EventKind::task_update,
                     json{{"action", "task-status"}}});
  write_file(ws.iteration_dir(0) / "r.json", "{}");
  auto a = ws.register_artifact(ws.iteration_dir(0) / "r.json",
                                ArtifactKind::result_table, "system", 0);
  // Oracle: replay the log and take the tail seq.
  Workspace ro = Workspace::open(tmp.sub("ws"), Workspace::Mode::read_only);
  std::uint64_t tail = 0;
  for (const auto& e : ro.events()) tail = e.seq;
  CHECK(a.created_seq == tail);
}

TEST_CASE("duplicate-replicate shape: 2 distinct hashes among 5 replicates") {
  TempDir tmp;
  Workspace ws = Workspace::init(tmp.sub("ws"));
  // Nine result files: four from one method, five replicates of another,
  // four of which carry the first method's bytes.
  std::string shared = "{\"metrics\": [1, 2, 3]}";
  write_file(ws.iteration_dir(0) / "method-a" / "out.json", shared);
  for (int i = 1; i <= 3; ++i)
    write_file(ws.iteration_dir(0) / "method-a" / ("extra" + std::to_string(i) + ".json"),
               "{\"extra\": " + std::to_string(i) + "}");
  for (int i = 1; i <= 4; ++i)
    write_file(ws.iteration_dir(0) / "method-b" / ("rep" + std::to_string(i) + ".json"),
               shared);
  write_file(ws.iteration_dir(0) / "method-b" / "rep5.json",
             "{\"metrics\": [9, 9, 9]}");

  std::vector<std::string> replicate_hashes;
  for (int i = 1; i <= 5; ++i) {
    auto a = ws.register_artifact(
        ws.iteration_dir(0) / "method-b" / ("rep" + std::to_string(i) + ".json"),
        ArtifactKind::result_table, "experimenter", 0);
    replicate_hashes.push_back(a.content_hash);
  }
  std::sort(replicate_hashes.begin(), replicate_hashes.end());
  replicate_hashes.erase(
      std::unique(replicate_hashes.begin(), replicate_hashes.end()),
      replicate_hashes.end());
  CHECK(replicate_hashes.size() == 2);
}

TEST_CASE("paths outside the workspace are rejected") {
  TempDir tmp;
  Workspace ws = Workspace::init(tmp.sub("ws"));
  write_file(tmp.sub("outside.json"), "{}");
  CHECK_THROWS_AS(ws.register_artifact(tmp.sub("outside.json"),
                                       ArtifactKind::other, "system", 0),
                  UsageError);
}

TEST_CASE("re-registration: idempotent on equal bytes, error on change") {
  TempDir tmp;
  Workspace ws = Workspace::init(tmp.sub("ws"));
  write_file(ws.iteration_dir(0) / "r.json", "{\"v\": 1}");
  auto first = ws.register_artifact(ws.iteration_dir(0) / "r.json",
                                    ArtifactKind::result_table, "system", 0);
  auto second = ws.register_artifact(ws.iteration_dir(0) / "r.json",
                                     ArtifactKind::result_table, "system", 0);
  CHECK(first.id == second.id);
  write_file(ws.iteration_dir(0) / "r.json", "{\"v\": 2}");
  CHECK_THROWS_AS(ws.register_artifact(ws.iteration_dir(0) / "r.json",
                                       ArtifactKind::result_table, "system", 0),
                  UsageError);
}

TEST_CASE("append order is read-back order") {
  TempDir tmp;
  Workspace ws = Workspace::init(tmp.sub("ws"));
  ws.append_event({kUnsetSeq, 0, StageId::ideation, EventKind::stage_end});
  ws.append_event({kUnsetSeq, 0, StageId::planning, EventKind::stage_start});
  Workspace ro = Workspace::open(tmp.sub("ws"), Workspace::Mode::read_only);
  REQUIRE(ro.events().size() == 3);
  CHECK(ro.events()[1].kind == EventKind::stage_end);
  CHECK(ro.events()[2].kind == EventKind::stage_start);
  for (std::size_t i = 0; i < ro.events().size(); ++i)
    CHECK(ro.events()[i].seq == i);
}

TEST_CASE("torn tail oracle: truncation at every byte keeps prior events") {
  TempDir tmp;
  {
    Workspace ws = Workspace::init(tmp.sub("ws"));
    for (int i = 0; i < 5; ++i)
      ws.append_event({kUnsetSeq, 0, StageId::ideation, EventKind::task_update,
                       json{{"action", "task-status"}, {"n", i}}});
  }
  std::string full;
  {
    std::ifstream in(tmp.sub("ws") / "events.log", std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    full = ss.str();
  }
  // Oracle: an event survives iff its full line content (newline optional
  // for the final line) is inside the prefix; anything ragged beyond that
  // is dropped and reported.
  std::vector<std::size_t> newline_at;
  for (std::size_t i = 0; i < full.size(); ++i)
    if (full[i] == '\n') newline_at.push_back(i);

  TempDir scratch;
  fs::create_directories(scratch.sub("copy"));
  fs::copy(tmp.sub("ws"), scratch.sub("copy"), fs::copy_options::recursive);
  for (std::size_t cut = 0; cut <= full.size(); ++cut) {
    std::string prefix = full.substr(0, cut);
    std::size_t complete = 0;
    for (std::size_t nl : newline_at)
      if (cut >= nl) ++complete;
    bool ragged_dropped = false;
    std::size_t last_boundary = 0;
    for (std::size_t nl : newline_at)
      if (cut >= nl + 1) last_boundary = nl + 1;
    if (cut > last_boundary && complete == [&] {
          std::size_t below = 0;
          for (std::size_t nl : newline_at)
            if (cut >= nl + 1) ++below;
          return below;
        }())
      ragged_dropped = true; // bytes beyond the last recovered line
    {
      std::ofstream out(scratch.sub("copy") / "events.log",
                        std::ios::binary | std::ios::trunc);
      out << prefix;
    }
    Workspace ro =
        Workspace::open(scratch.sub("copy"), Workspace::Mode::read_only);
    CHECK(ro.events().size() == complete);
    CHECK(ro.recovery().tail_truncated == ragged_dropped);
  }
}

TEST_CASE("mid-file corruption is an integrity error naming the line") {
  TempDir tmp;
  {
    Workspace ws = Workspace::init(tmp.sub("ws"));
    for (int i = 0; i < 3; ++i)
      ws.append_event({kUnsetSeq, 0, StageId::ideation, EventKind::task_update});
  }
  std::vector<std::string> lines;
  {
    std::ifstream in(tmp.sub("ws") / "events.log");
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
  }
  lines[1] = "{corrupt";
  {
    std::ofstream out(tmp.sub("ws") / "events.log", std::ios::trunc);
    for (const auto& l : lines) out << l << "\n";
  }
  try {
    Workspace::open(tmp.sub("ws"), Workspace::Mode::read_only);
    FAIL("expected IntegrityError");
  } catch (const IntegrityError& e) {
    CHECK(e.first_bad_line == 2);
  }
}

TEST_CASE("seq gap is an integrity error") {
  TempDir tmp;
  {
    Workspace ws = Workspace::init(tmp.sub("ws"));
    ws.append_event({kUnsetSeq, 0, StageId::ideation, EventKind::task_update});
  }
  std::vector<std::string> lines;
  {
    std::ifstream in(tmp.sub("ws") / "events.log");
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
  }
  json j = json::parse(lines[1]);
  j["seq"] = 7;
  lines[1] = j.dump();
  {
    std::ofstream out(tmp.sub("ws") / "events.log", std::ios::trunc);
    for (const auto& l : lines) out << l << "\n";
  }
  CHECK_THROWS_AS(Workspace::open(tmp.sub("ws"), Workspace::Mode::read_only),
                  IntegrityError);
}

TEST_CASE("second writer is refused, readers are not") {
  TempDir tmp;
  Workspace ws = Workspace::init(tmp.sub("ws"));
  CHECK_THROWS_AS(Workspace::open(tmp.sub("ws")), UsageError);
  CHECK_NOTHROW(Workspace::open(tmp.sub("ws"), Workspace::Mode::read_only));
}

TEST_CASE("replay determinism: snapshot equals reopen snapshot") {
  TempDir tmp;
  std::string live;
  {
    Workspace ws = Workspace::init(tmp.sub("ws"));
    write_file(ws.iteration_dir(0) / "r.json", "{\"v\": 3}");
    ws.register_artifact(ws.iteration_dir(0) / "r.json",
                         ArtifactKind::result_table, "system", 0);
    ws.append_event({kUnsetSeq, 0, StageId::ideation, EventKind::stage_end});
    ws.append_event({kUnsetSeq, 0, StageId::planning, EventKind::stage_start});
    ws.append_event(
        {kUnsetSeq, 0, StageId::planning, EventKind::rollback,
         json{{"target_iteration", 0}, {"target_stage", "ideation"}}});
    live = ws.state_snapshot();
  }
  Workspace replayed = Workspace::open(tmp.sub("ws"), Workspace::Mode::read_only);
  CHECK(replayed.state_snapshot() == live);
  CHECK(replayed.current_stage() == StageId::ideation); // rollback applied
}
