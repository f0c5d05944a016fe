#pragma once

// Generated fixture workspaces that encode the published audit statistics
// this project reproduces at desk scale. Fixtures are generated, never
// committed as blobs: the builders below document exactly which numbers
// are encoded, and each ships a manifest the acceptance suite compares
// auditor output against.

#include <string>
#include <vector>

#include "harness/json_io.hpp"

namespace harness {

struct FixtureManifest {
  std::string name;
  std::string provenance; // "paper-table" | "constructed"
  std::string source_citation;
  std::vector<std::string> files;
  json expected = json::object();

  json to_json() const;
};

// Conversion-event sample: 8 signal/update pairs with latency multiset
// {0,0,0,1,1,1,1,3} (lower median 1, max 3), one harness-side event.
FixtureManifest build_conversion_fixture(const fs::path& dir);

// Five recovered failure classes, each caught critically and converted.
FixtureManifest build_failure_fixture(const fs::path& dir);

// 37 review/action rows across 12 project tracks: 10 down / 6 flat /
// 10 up / 11 no-prior, mean deltas -0.82 / 0.00 / +0.70, high-severity
// means 8.7 / 6.5 / 4.0 / 3.8 over rows with parsed counts.
FixtureManifest build_review_fixture(const fs::path& dir);

// 1,853 stage-end records whose adjacent-pair counts reproduce the eleven
// published transition-group rows exactly; filler cells complete an
// Eulerian walk.
FixtureManifest build_transition_fixture(const fs::path& dir);

// 416 recurring issue patterns: 212 experiment, 89 writing, 84 analysis,
// 20 system, 4 ideation, 3 pipeline, 3 planning, 1 efficiency.
FixtureManifest build_digest_fixture(const fs::path& dir);

// All of the above under <outdir>/<name>/ with manifests alongside.
// Refuses a non-empty output directory.
std::vector<FixtureManifest> build_fixtures(const fs::path& outdir);

} // namespace harness
