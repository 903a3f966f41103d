#pragma once

// Byte-exact snapshot comparison. Set LONGGUIDE_UPDATE_GOLDEN=1 to rewrite.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace golden {

inline std::filesystem::path path(const std::string& name) {
  return std::filesystem::path(LONGGUIDE_GOLDEN_DIR) / name;
}

inline std::string read(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Empty on match; otherwise a description of the mismatch.
inline std::string check(const std::string& name, const std::string& actual) {
  const auto p = path(name);
  if (const char* u = std::getenv("LONGGUIDE_UPDATE_GOLDEN"); u && std::string(u) == "1") {
    std::ofstream(p, std::ios::binary) << actual;
    return {};
  }
  if (!std::filesystem::exists(p)) return "missing golden file " + p.string();
  const std::string expected = read(p);
  if (expected == actual) return {};
  std::size_t i = 0;
  while (i < expected.size() && i < actual.size() && expected[i] == actual[i]) ++i;
  return name + " differs at byte " + std::to_string(i);
}

}  // namespace golden
