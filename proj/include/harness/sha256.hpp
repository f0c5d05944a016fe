#pragma once

// Minimal SHA-256 (FIPS 180-4). The store needs a collision-resistant
// 256-bit digest for duplicate discovery, nothing more; the algorithm name
// is recorded in the workspace manifest so it can never silently change.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace harness {

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& p);

} // namespace harness
