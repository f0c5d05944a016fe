#pragma once

// On-disk workspace: content-addressed artifact records plus an append-only
// event log.
//
// Layout:
//   <root>/manifest.json          hash algorithm, schema version
//   <root>/events.log             one JSON record per line, append-only
//   <root>/lock                   advisory lock marker (flock'd by writers)
//   <root>/iterations/NNNN/       artifact files, one dir per iteration
//   <root>/registry/artifacts/    one record file per artifact
//   <root>/registry/...           claims, budget, harness-updates (other modules)
//   <root>/memory/                issue and overlay records
//   <root>/config/                live policy tables
//
// Invariants:
//   - seq strictly monotone, no gaps; assigned only by append_event.
//   - artifact rel_path never escapes the root; (rel_path, iteration) unique.
//   - artifacts are immutable by hash: re-registering the same (rel_path,
//     iteration) with different bytes is rejected; changed content must be
//     registered under a new path.
//   - a torn final log line is dropped on open and reported; a bad line
//     anywhere else is an integrity error naming the line.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "harness/ids.hpp"
#include "harness/json_io.hpp"

namespace harness {

inline constexpr std::uint64_t kUnsetSeq = ~std::uint64_t{0};

struct ArtifactRecord {
  std::string id;
  std::string rel_path;
  std::string content_hash;
  ArtifactKind kind = ArtifactKind::other;
  std::string producer_role; // role name or "system"
  int iteration = 0;
  std::uint64_t created_seq = 0;
  json extra = json::object(); // unknown fields, preserved on rewrite

  json to_json() const;
  static ArtifactRecord from_json(const json& j);
};

struct EventRecord {
  std::uint64_t seq = kUnsetSeq; // assigned by the store
  int iteration = 0;
  StageId stage = StageId::ideation;
  EventKind kind = EventKind::stage_start;
  json payload = json::object();
  std::vector<std::string> payload_refs; // artifact ids
  std::vector<std::string> cause_refs;   // citation links ("artifact:..", "finding:..", ...)
  HfSet hf;                              // harness-function tags

  json to_json() const;
  static EventRecord from_json(const json& j);
};

struct RecoveryReport {
  bool tail_truncated = false;
  std::string detail;
};

class Workspace {
public:
  enum class Mode { read_write, read_only };

  // Refuses a non-empty root. Seeds the skeleton and the iteration-0
  // stage-start event.
  static Workspace init(const fs::path& root);
  static Workspace open(const fs::path& root, Mode mode = Mode::read_write);

  Workspace(Workspace&&) noexcept;
  Workspace& operator=(Workspace&&) noexcept;
  Workspace(const Workspace&) = delete;
  Workspace& operator=(const Workspace&) = delete;
  ~Workspace();

  // -- artifacts ------------------------------------------------------------
  ArtifactRecord register_artifact(const fs::path& file, ArtifactKind kind,
                                   const std::string& producer_role,
                                   int iteration);
  const std::vector<ArtifactRecord>& artifacts() const { return artifacts_; }
  std::optional<ArtifactRecord> find_artifact(const std::string& id) const;
  std::optional<ArtifactRecord> find_artifact_by_path(const std::string& rel,
                                                      int iteration) const;
  fs::path artifact_file(const ArtifactRecord& a) const;
  // Digest of the bytes currently on disk (registration hash is historical).
  std::string live_hash(const ArtifactRecord& a) const;

  // -- events ---------------------------------------------------------------
  std::uint64_t append_event(EventRecord ev);
  const std::vector<EventRecord>& events() const { return events_; }
  std::uint64_t tail_seq() const;

  // -- replayed position ------------------------------------------------------
  int current_iteration() const { return iteration_; }
  StageId current_stage() const { return stage_; }

  // -- paths ------------------------------------------------------------------
  const fs::path& root() const { return root_; }
  fs::path iteration_dir(int it) const;
  fs::path ensure_iteration_dir(int it);
  fs::path registry_dir() const { return root_ / "registry"; }
  fs::path memory_dir() const { return root_ / "memory"; }
  fs::path config_dir() const { return root_ / "config"; }
  fs::path events_path() const { return root_ / "events.log"; }

  // Canonical serialization of replayed state; equal strings mean equal
  // state. Used by the replay-determinism checks.
  std::string state_snapshot() const;

  const RecoveryReport& recovery() const { return recovery_; }
  Mode mode() const { return mode_; }
  std::string next_record_id(const std::string& prefix);

private:
  Workspace() = default;
  void load();
  void acquire_lock();
  void release_lock();
  std::string rel_of(const fs::path& file) const;

  fs::path root_;
  Mode mode_ = Mode::read_write;
  int lock_fd_ = -1;
  std::vector<ArtifactRecord> artifacts_;
  std::vector<EventRecord> events_;
  std::map<std::string, std::uint64_t> id_counters_;
  int iteration_ = 0;
  StageId stage_ = StageId::ideation;
  RecoveryReport recovery_;
};

} // namespace harness
