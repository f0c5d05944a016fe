#include "harness/json_io.hpp"

#include <fstream>
#include <sstream>

namespace harness {

json read_json_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("invalid json in " + p.string() + ": " + e.what());
  }
  return j;
}

void write_text_file(const fs::path& p, const std::string& text) {
  fs::path tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << text;
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, p, ec);
  if (ec) throw IoError("rename " + tmp.string() + " -> " + p.string() + ": " +
                        ec.message());
}

void write_json_file(const fs::path& p, const json& j) {
  write_text_file(p, j.dump(2) + "\n");
}

std::string read_text_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

} // namespace harness
