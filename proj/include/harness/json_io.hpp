#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "harness/errors.hpp"

namespace harness {

using json = nlohmann::json;
namespace fs = std::filesystem;

inline constexpr int kSchemaVersion = 1;

json read_json_file(const fs::path& p);

// Atomic write: tmp file + rename on the same filesystem.
void write_json_file(const fs::path& p, const json& j);

void write_text_file(const fs::path& p, const std::string& text);
std::string read_text_file(const fs::path& p);

// Compact single-line dump with sorted keys (nlohmann objects are ordered
// maps, so dump() is already canonical for equal content).
inline std::string canonical(const json& j) { return j.dump(); }

} // namespace harness
