#include "harness/workspace.hpp"

#include <algorithm>
#include <fstream>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include "harness/sha256.hpp"

namespace harness {

namespace {

std::string iter_dirname(int it) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d", it);
  return buf;
}

} // namespace

// ---------------------------------------------------------------------------
// record serialization
// ---------------------------------------------------------------------------

json ArtifactRecord::to_json() const {
  json j = extra;
  j["schema_version"] = kSchemaVersion;
  j["id"] = id;
  j["rel_path"] = rel_path;
  j["content_hash"] = content_hash;
  j["kind"] = to_string(kind);
  j["producer_role"] = producer_role;
  j["iteration"] = iteration;
  j["created_seq"] = created_seq;
  return j;
}

ArtifactRecord ArtifactRecord::from_json(const json& j) {
  ArtifactRecord a;
  a.id = j.at("id").get<std::string>();
  a.rel_path = j.at("rel_path").get<std::string>();
  a.content_hash = j.at("content_hash").get<std::string>();
  a.kind = artifact_kind_from(j.at("kind").get<std::string>());
  a.producer_role = j.at("producer_role").get<std::string>();
  a.iteration = j.at("iteration").get<int>();
  a.created_seq = j.at("created_seq").get<std::uint64_t>();
  a.extra = j;
  for (const char* k : {"schema_version", "id", "rel_path", "content_hash",
                        "kind", "producer_role", "iteration", "created_seq"})
    a.extra.erase(k);
  return a;
}

json EventRecord::to_json() const {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["seq"] = seq;
  j["iteration"] = iteration;
  j["stage"] = to_string(stage);
  j["kind"] = to_string(kind);
  if (!payload.empty()) j["payload"] = payload;
  if (!payload_refs.empty()) j["payload_refs"] = payload_refs;
  if (!cause_refs.empty()) j["cause_refs"] = cause_refs;
  if (!hf.empty()) {
    json tags = json::array();
    for (auto h : hf) tags.push_back(to_string(h));
    j["hf"] = tags;
  }
  return j;
}

EventRecord EventRecord::from_json(const json& j) {
  EventRecord e;
  e.seq = j.at("seq").get<std::uint64_t>();
  e.iteration = j.at("iteration").get<int>();
  e.stage = stage_from(j.at("stage").get<std::string>());
  e.kind = event_kind_from(j.at("kind").get<std::string>());
  if (j.contains("payload")) e.payload = j["payload"];
  if (j.contains("payload_refs"))
    e.payload_refs = j["payload_refs"].get<std::vector<std::string>>();
  if (j.contains("cause_refs"))
    e.cause_refs = j["cause_refs"].get<std::vector<std::string>>();
  if (j.contains("hf"))
    for (const auto& t : j["hf"]) e.hf.push_back(hf_from(t.get<std::string>()));
  return e;
}

// ---------------------------------------------------------------------------
// lifecycle
// ---------------------------------------------------------------------------

Workspace Workspace::init(const fs::path& root) {
  if (fs::exists(root) && !fs::is_empty(root))
    throw UsageError("workspace exists: " + root.string());
  fs::create_directories(root / "iterations" / iter_dirname(0));
  fs::create_directories(root / "registry" / "artifacts");
  fs::create_directories(root / "memory" / "issues");
  fs::create_directories(root / "memory" / "overlays");
  fs::create_directories(root / "memory" / "global");
  fs::create_directories(root / "config");
  write_json_file(root / "manifest.json",
                  json{{"schema_version", kSchemaVersion},
                       {"hash_algorithm", "sha-256"}});
  write_text_file(root / "lock", "");
  { std::ofstream log(root / "events.log", std::ios::binary); }

  Workspace ws;
  ws.root_ = fs::absolute(root);
  ws.mode_ = Mode::read_write;
  ws.acquire_lock();
  EventRecord genesis;
  genesis.kind = EventKind::stage_start;
  ws.append_event(std::move(genesis));
  return ws;
}

Workspace Workspace::open(const fs::path& root, Mode mode) {
  if (!fs::exists(root / "manifest.json"))
    throw UsageError("not a workspace: " + root.string());
  Workspace ws;
  ws.root_ = fs::absolute(root);
  ws.mode_ = mode;
  if (mode == Mode::read_write) ws.acquire_lock();
  ws.load();
  return ws;
}

Workspace::Workspace(Workspace&& other) noexcept { *this = std::move(other); }

Workspace& Workspace::operator=(Workspace&& other) noexcept {
  if (this != &other) {
    release_lock();
    root_ = std::move(other.root_);
    mode_ = other.mode_;
    lock_fd_ = other.lock_fd_;
    other.lock_fd_ = -1;
    artifacts_ = std::move(other.artifacts_);
    events_ = std::move(other.events_);
    id_counters_ = std::move(other.id_counters_);
    iteration_ = other.iteration_;
    stage_ = other.stage_;
    recovery_ = std::move(other.recovery_);
  }
  return *this;
}

Workspace::~Workspace() { release_lock(); }

void Workspace::acquire_lock() {
  lock_fd_ = ::open((root_ / "lock").c_str(), O_RDWR | O_CREAT, 0644);
  if (lock_fd_ < 0) throw IoError("cannot open lock marker in " + root_.string());
  if (::flock(lock_fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(lock_fd_);
    lock_fd_ = -1;
    throw UsageError("workspace is held by another writer: " + root_.string());
  }
}

void Workspace::release_lock() {
  if (lock_fd_ >= 0) {
    ::flock(lock_fd_, LOCK_UN);
    ::close(lock_fd_);
    lock_fd_ = -1;
  }
}

// ---------------------------------------------------------------------------
// load / replay
// ---------------------------------------------------------------------------

void Workspace::load() {
  // Artifact records, ordered by id.
  const fs::path adir = registry_dir() / "artifacts";
  std::vector<fs::path> files;
  if (fs::exists(adir))
    for (const auto& e : fs::directory_iterator(adir))
      if (e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files)
    artifacts_.push_back(ArtifactRecord::from_json(read_json_file(f)));

  // Event log. A torn final line is dropped and reported; anything else
  // unreadable is corruption.
  std::ifstream in(events_path(), std::ios::binary);
  if (!in) throw IoError("cannot read " + events_path().string());
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  bool ends_with_newline = true;
  {
    std::ifstream raw(events_path(), std::ios::binary | std::ios::ate);
    if (raw.tellg() > 0) {
      raw.seekg(-1, std::ios::end);
      char last;
      raw.get(last);
      ends_with_newline = (last == '\n');
    }
  }
  std::uint64_t expect = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const bool is_last = (i + 1 == lines.size());
    EventRecord ev;
    bool parsed = false;
    try {
      ev = EventRecord::from_json(json::parse(lines[i]));
      parsed = true;
    } catch (const std::exception& e) {
      if (is_last && !ends_with_newline) {
        recovery_.tail_truncated = true;
        recovery_.detail = "dropped torn final log line " +
                           std::to_string(i + 1) + ": " + e.what();
        break;
      }
      throw IntegrityError("event log corrupt at line " + std::to_string(i + 1) +
                               ": " + e.what(),
                           i + 1);
    }
    if (parsed) {
      if (ev.seq != expect)
        throw IntegrityError("event log corrupt at line " +
                                 std::to_string(i + 1) + ": seq " +
                                 std::to_string(ev.seq) + ", expected " +
                                 std::to_string(expect),
                             i + 1);
      ++expect;
      if (ev.kind == EventKind::stage_start) {
        iteration_ = ev.iteration;
        stage_ = ev.stage;
      } else if (ev.kind == EventKind::rollback) {
        iteration_ = ev.payload.at("target_iteration").get<int>();
        stage_ = stage_from(ev.payload.at("target_stage").get<std::string>());
      }
      events_.push_back(std::move(ev));
    }
  }

  // Recover id counters from existing records.
  for (const auto& a : artifacts_) {
    auto dash = a.id.rfind('-');
    if (dash != std::string::npos) {
      auto& c = id_counters_[a.id.substr(0, dash)];
      c = std::max<std::uint64_t>(c, std::stoull(a.id.substr(dash + 1)));
    }
  }
}

// ---------------------------------------------------------------------------
// artifacts
// ---------------------------------------------------------------------------

std::string Workspace::rel_of(const fs::path& file) const {
  fs::path abs = fs::weakly_canonical(fs::absolute(file));
  fs::path rootc = fs::weakly_canonical(root_);
  auto rel = abs.lexically_relative(rootc);
  if (rel.empty() || rel.native().rfind("..", 0) == 0)
    throw UsageError("path outside workspace: " + file.string());
  return rel.generic_string();
}

ArtifactRecord Workspace::register_artifact(const fs::path& file,
                                            ArtifactKind kind,
                                            const std::string& producer_role,
                                            int iteration) {
  if (mode_ != Mode::read_write)
    throw UsageError("read-only workspace");
  if (iteration > iteration_)
    throw UsageError("artifact iteration " + std::to_string(iteration) +
                     " is ahead of current iteration " +
                     std::to_string(iteration_));
  fs::path abs = file.is_absolute() ? file : root_ / file;
  std::string rel = rel_of(abs);
  if (!fs::exists(abs)) throw IoError("no such file: " + abs.string());
  std::string hash = sha256_file(abs);

  if (auto existing = find_artifact_by_path(rel, iteration)) {
    if (existing->content_hash == hash) return *existing; // idempotent
    throw UsageError("artifact already registered with different content: " +
                     rel + " @ iteration " + std::to_string(iteration));
  }

  ArtifactRecord a;
  a.id = next_record_id("a");
  a.rel_path = rel;
  a.content_hash = hash;
  a.kind = kind;
  a.producer_role = producer_role;
  a.iteration = iteration;
  a.created_seq = tail_seq();
  write_json_file(registry_dir() / "artifacts" / (a.id + ".json"), a.to_json());
  artifacts_.push_back(a);
  return a;
}

std::optional<ArtifactRecord>
Workspace::find_artifact(const std::string& id) const {
  for (const auto& a : artifacts_)
    if (a.id == id) return a;
  return std::nullopt;
}

std::optional<ArtifactRecord>
Workspace::find_artifact_by_path(const std::string& rel, int iteration) const {
  for (const auto& a : artifacts_)
    if (a.rel_path == rel && a.iteration == iteration) return a;
  return std::nullopt;
}

fs::path Workspace::artifact_file(const ArtifactRecord& a) const {
  return root_ / fs::path(a.rel_path);
}

std::string Workspace::live_hash(const ArtifactRecord& a) const {
  return sha256_file(artifact_file(a));
}

// ---------------------------------------------------------------------------
// events
// ---------------------------------------------------------------------------

std::uint64_t Workspace::tail_seq() const {
  return events_.empty() ? 0 : events_.back().seq;
}

std::uint64_t Workspace::append_event(EventRecord ev) {
  if (mode_ != Mode::read_write)
    throw UsageError("read-only workspace");
  if (ev.seq != kUnsetSeq)
    throw UsageError("event seq is assigned by the store");
  if (ev.kind == EventKind::stage_end &&
      (ev.iteration != iteration_ || ev.stage != stage_))
    throw UsageError("stage-end without matching stage-start: " +
                     to_string(ev.stage) + " @ " + std::to_string(ev.iteration));
  if (ev.kind == EventKind::rollback &&
      (!ev.payload.contains("target_iteration") ||
       !ev.payload.contains("target_stage")))
    throw UsageError("rollback event must name a target (iteration, stage)");

  ev.seq = events_.empty() ? 0 : events_.back().seq + 1;
  std::ofstream out(events_path(), std::ios::binary | std::ios::app);
  if (!out) throw IoError("cannot append to " + events_path().string());
  out << ev.to_json().dump() << "\n";
  out.flush();
  if (!out) throw IoError("short append to " + events_path().string());

  if (ev.kind == EventKind::stage_start) {
    iteration_ = ev.iteration;
    stage_ = ev.stage;
  } else if (ev.kind == EventKind::rollback) {
    iteration_ = ev.payload.at("target_iteration").get<int>();
    stage_ = stage_from(ev.payload.at("target_stage").get<std::string>());
  }
  events_.push_back(std::move(ev));
  return events_.back().seq;
}

// ---------------------------------------------------------------------------
// misc
// ---------------------------------------------------------------------------

fs::path Workspace::iteration_dir(int it) const {
  return root_ / "iterations" / iter_dirname(it);
}

fs::path Workspace::ensure_iteration_dir(int it) {
  fs::path d = iteration_dir(it);
  fs::create_directories(d);
  return d;
}

std::string Workspace::next_record_id(const std::string& prefix) {
  std::uint64_t n = ++id_counters_[prefix];
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s-%06llu", prefix.c_str(),
                static_cast<unsigned long long>(n));
  return buf;
}

std::string Workspace::state_snapshot() const {
  json j;
  j["iteration"] = iteration_;
  j["stage"] = to_string(stage_);
  j["tail_seq"] = events_.empty() ? json() : json(tail_seq());
  json arts = json::array();
  auto sorted = artifacts_;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& x, const auto& y) { return x.id < y.id; });
  for (const auto& a : sorted) arts.push_back(a.to_json());
  j["artifacts"] = arts;
  json evs = json::array();
  for (const auto& e : events_) evs.push_back(e.to_json());
  j["events"] = evs;
  return canonical(j);
}

} // namespace harness
