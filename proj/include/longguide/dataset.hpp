#pragma once

// Samples, line-delimited JSON datasets and demonstration formatting.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "longguide/error.hpp"
#include "longguide/strings.hpp"

namespace longguide {

inline constexpr std::size_t kMaxTrainSamples = 50;

struct Sample {
  std::string input;
  std::string reference;

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct TaskDataset {
  std::string name;
  std::vector<Sample> samples;
  std::vector<std::string> warnings;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }

  std::vector<std::string> references() const {
    std::vector<std::string> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.reference);
    return out;
  }
};

namespace detail {

inline std::string required_string(const nlohmann::json& obj, const char* field, std::size_t line) {
  auto it = obj.find(field);
  if (it == obj.end())
    throw DataError("line " + std::to_string(line) + ": missing field " + field);
  if (!it->is_string())
    throw DataError("line " + std::to_string(line) + ": field " + field + " is not a string");
  return it->get<std::string>();
}

}  // namespace detail

/// Parses records {"input": ..., "output": ...}, one JSON object per line.
/// Blank lines are skipped. When max_samples is given, extra records are
/// dropped with a warning.
inline TaskDataset parse_dataset(std::istream& in, std::string name,
                                 std::size_t max_samples = std::numeric_limits<std::size_t>::max()) {
  TaskDataset ds;
  ds.name = std::move(name);
  std::string line;
  std::size_t lineno = 0;
  std::size_t total = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (str::trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      throw DataError("line " + std::to_string(lineno) + ": malformed JSON");
    }
    if (!j.is_object()) throw DataError("line " + std::to_string(lineno) + ": expected an object");
    Sample s{detail::required_string(j, "input", lineno), detail::required_string(j, "output", lineno)};
    if (str::trim(s.reference).empty())
      throw DataError("line " + std::to_string(lineno) + ": empty output");
    ++total;
    if (ds.samples.size() < max_samples) ds.samples.push_back(std::move(s));
  }
  if (total > ds.samples.size()) {
    ds.warnings.push_back(ds.name + ": " + std::to_string(total) + " samples, truncated to " +
                          std::to_string(ds.samples.size()));
  }
  return ds;
}

inline TaskDataset load_dataset(const std::filesystem::path& path,
                                std::size_t max_samples = std::numeric_limits<std::size_t>::max()) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset " + path.string());
  try {
    return parse_dataset(in, path.filename().string(), max_samples);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

/// "Input: x\nOutput: y" blocks separated by blank lines.
inline std::string format_demonstrations(const std::vector<Sample>& demos) {
  std::string out;
  for (std::size_t i = 0; i < demos.size(); ++i) {
    if (i) out += "\n\n";
    out += "Input: " + demos[i].input + "\nOutput: " + demos[i].reference;
  }
  return out;
}

/// Uniform integer in [0, bound) from a 64-bit Mersenne Twister. Unlike
/// std::uniform_int_distribution the result is identical on every platform.
inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t bound) {
  const std::uint64_t n = bound;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return static_cast<std::size_t>(x % n);
}

/// min(k, population) distinct indices via partial Fisher-Yates, in draw order.
inline std::vector<std::size_t> sample_without_replacement(std::mt19937_64& rng,
                                                           std::size_t population, std::size_t k) {
  std::vector<std::size_t> idx(population);
  for (std::size_t i = 0; i < population; ++i) idx[i] = i;
  const std::size_t take = std::min(k, population);
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + uniform_index(rng, population - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(take);
  return idx;
}

}  // namespace longguide
