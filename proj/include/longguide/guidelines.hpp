#pragma once

// Self-evaluated metric scores, the metric guideline and the output
// constraint guideline.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "longguide/backend.hpp"
#include "longguide/catalog.hpp"
#include "longguide/dataset.hpp"
#include "longguide/error.hpp"
#include "longguide/prompts.hpp"
#include "longguide/strings.hpp"
#include "longguide/textstat.hpp"

namespace longguide {

struct MetricScore {
  MetricId metric;
  double mean = 0.0;
  std::size_t count = 0;
  std::vector<double> scores;  // per-sample aggregated score, in update order
};

/// Running per-metric means over self-evaluation scores on [1, 5].
class MetricScoreTable {
 public:
  MetricScoreTable() = default;
  explicit MetricScoreTable(const std::vector<MetricId>& metrics) {
    for (const auto& m : metrics) entries_.push_back({m, 0.0, 0, {}});
  }

  /// Incremental mean: s <- s + (x - s) / (i + 1), i = samples seen so far.
  void record(const MetricId& metric, double score) {
    auto* e = find_mutable(metric.name);
    if (!e) throw DataError("metric not in score table: " + metric.name);
    e->mean += (score - e->mean) / static_cast<double>(e->count + 1);
    ++e->count;
    e->scores.push_back(score);
  }

  const MetricScore* find(std::string_view name) const {
    for (const auto& e : entries_)
      if (str::iequals(e.metric.name, name)) return &e;
    return nullptr;
  }

  const std::vector<MetricScore>& entries() const { return entries_; }
  std::vector<MetricScore>& entries() { return entries_; }

 private:
  MetricScore* find_mutable(std::string_view name) {
    for (auto& e : entries_)
      if (str::iequals(e.metric.name, name)) return &e;
    return nullptr;
  }

  std::vector<MetricScore> entries_;
};

/// Median of the values; the lower median for an even count.
inline int median_score(std::vector<int> values) {
  if (values.empty()) throw DataError("median of empty set");
  std::sort(values.begin(), values.end());
  return values[(values.size() - 1) / 2];
}

namespace detail {

/// Text of the first balanced {...} block, braces included.
inline std::optional<std::string_view> first_brace_block(std::string_view text) {
  const auto open = text.find('{');
  if (open == std::string_view::npos) return std::nullopt;
  int depth = 0;
  for (std::size_t i = open; i < text.size(); ++i) {
    if (text[i] == '{') ++depth;
    if (text[i] == '}' && --depth == 0) return text.substr(open, i - open + 1);
  }
  return std::nullopt;
}

/// "key": number pairs inside a dictionary-like block, quotes optional.
inline std::vector<std::pair<std::string, double>> key_number_pairs(std::string_view block) {
  static const std::regex kPair(R"re(["']?([^"'{},:\n]+?)["']?\s*:\s*(-?\d+(?:\.\d+)?))re");
  std::vector<std::pair<std::string, double>> out;
  const std::string s(block);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), kPair); it != std::sregex_iterator(); ++it) {
    out.emplace_back(std::string(str::trim((*it)[1].str())), std::stod((*it)[2].str()));
  }
  return out;
}

inline bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

/// Strips list markers ("-", "*", "1.", "2)") and markdown bold from the front of a line.
inline std::string_view strip_bullet(std::string_view line, bool* was_bullet = nullptr) {
  line = str::trim(line);
  bool bullet = false;
  if (line.starts_with("- ") || line.starts_with("* ") || line.starts_with("\xE2\x80\xA2")) {
    line.remove_prefix(line.starts_with("\xE2\x80\xA2") ? 3 : 1);
    bullet = true;
  } else {
    std::size_t d = 0;
    while (d < line.size() && std::isdigit(static_cast<unsigned char>(line[d]))) ++d;
    if (d > 0 && d + 1 < line.size() && (line[d] == '.' || line[d] == ')') &&
        str::is_space(line[d + 1])) {
      line.remove_prefix(d + 1);
      bullet = true;
    }
  }
  line = str::trim(line);
  if (was_bullet) *was_bullet = bullet;
  return line;
}

inline std::string_view strip_bold(std::string_view s) {
  while (s.starts_with("**") || s.starts_with("__")) s.remove_prefix(2);
  return str::trim(s);
}

}  // namespace detail

using ScoreDict = std::map<std::string, int>;

/// Reads the first {...} block of a response into canonical metric name -> score.
/// Keys that are not among `metrics` are ignored.
inline ScoreDict parse_score_dict(std::string_view text, const std::vector<MetricId>& metrics) {
  auto block = detail::first_brace_block(text);
  if (!block) throw ParseError("no dictionary block in response");
  ScoreDict out;
  for (const auto& [key, value] : detail::key_number_pairs(*block)) {
    for (const auto& m : metrics) {
      if (str::iequals(m.name, key)) {
        out.emplace(m.name, static_cast<int>(std::lround(value)));
        break;
      }
    }
  }
  if (out.empty()) throw ParseError("no expected keys");
  return out;
}

using DefinitionMap = std::map<std::string, std::string>;

inline std::string fallback_definition(std::string_view name) {
  return "quality of the output with respect to " + std::string(name);
}

struct Definitions {
  DefinitionMap text;
  std::vector<std::string> warnings;
};

inline std::string comma_list(const std::vector<MetricId>& metrics) {
  std::vector<std::string> names;
  for (const auto& m : metrics) names.push_back(m.name);
  return str::join(names, ", ");
}

inline std::string render_definition_prompt(std::string_view task_name,
                                            const std::vector<MetricId>& metrics) {
  const std::string list = comma_list(metrics);
  return prompts::render(prompts::kDefineMetrics, {{"{TASK_NAME}", task_name}, {"{METRICS}", list}});
}

/// A line whose text (after any list marker) begins with a metric name starts
/// that metric's definition; following lines without a metric name continue it.
inline Definitions parse_definitions(std::string_view response, const std::vector<MetricId>& metrics) {
  Definitions out;
  std::optional<std::string> current;
  for (const auto& raw : str::split_lines(response)) {
    std::string_view line = detail::strip_bold(detail::strip_bullet(raw));
    if (line.empty()) continue;
    const MetricId* hit = nullptr;
    for (const auto& m : metrics) {
      if (line.size() >= m.name.size() && str::iequals(line.substr(0, m.name.size()), m.name) &&
          (line.size() == m.name.size() || !detail::is_word_char(line[m.name.size()]))) {
        if (!hit || m.name.size() > hit->name.size()) hit = &m;
      }
    }
    if (hit && !out.text.contains(hit->name)) {
      std::string_view rest = line.substr(hit->name.size());
      while (!rest.empty() && (rest.front() == '*' || rest.front() == '_' || rest.front() == ':' ||
                               rest.front() == '-' || str::is_space(rest.front())))
        rest.remove_prefix(1);
      current = hit->name;
      out.text[hit->name] = std::string(rest);
    } else if (current) {
      auto& def = out.text[*current];
      if (!def.empty()) def += ' ';
      def += line;
    }
  }
  for (const auto& m : metrics) {
    auto it = out.text.find(m.name);
    if (it == out.text.end() || str::trim(it->second).empty()) {
      out.text[m.name] = fallback_definition(m.name);
      out.warnings.push_back("no definition returned for " + m.name + "; using fallback");
    }
  }
  return out;
}

/// One backend call asking the model to define each metric for the task.
inline Definitions fetch_definitions(const std::vector<MetricId>& metrics, std::string_view task_name,
                                     const Generator& model) {
  if (metrics.empty()) throw DataError("no metrics to define");
  return parse_definitions(model.generate(render_definition_prompt(task_name, metrics)), metrics);
}

inline std::string render_scoring_prompt(std::string_view task_name, const Sample& sample,
                                         const std::vector<MetricId>& metrics,
                                         const DefinitionMap& definitions) {
  std::string format = "{";
  std::vector<std::string> def_lines;
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    if (i) format += ", ";
    format += "\"" + metrics[i].name + "\": <1-5>";
    auto it = definitions.find(metrics[i].name);
    def_lines.push_back("- " + metrics[i].name + ": " +
                        (it != definitions.end() ? it->second : fallback_definition(metrics[i].name)));
  }
  format += "}";
  const std::string defs = str::join(def_lines, "\n");
  return prompts::render(prompts::kScoreMetrics, {{"{TASK_NAME}", task_name},
                                                  {"{INPUT}", sample.input},
                                                  {"{OUTPUT}", sample.reference},
                                                  {"{EVALUATION_FORMAT}", format},
                                                  {"{METRICS_DEFINITIONS}", defs}});
}

struct SampleScores {
  std::optional<ScoreDict> medians;  // empty when every response failed to parse
  std::vector<std::string> responses;
  std::vector<std::string> warnings;
};

/// Self-consistency scoring of one (input, output) pair: each sampled
/// response is parsed (one retry per unparseable response), scores are
/// clamped to [lo, hi], and each metric takes the median over the parsed
/// responses.
inline SampleScores score_sample(const Generator& model, const std::string& prompt,
                                 const std::vector<MetricId>& metrics, int lo = 1, int hi = 5) {
  SampleScores out;
  std::map<std::string, std::vector<int>> per_metric;
  out.responses = model.sample(prompt);
  GenerationParams single = model.settings().sampling;
  single.n_samples = 1;
  const std::size_t drawn = out.responses.size();
  for (std::size_t k = 0; k < drawn; ++k) {
    std::optional<ScoreDict> dict;
    std::string response = out.responses[k];
    for (int attempt = 0; attempt < 2 && !dict; ++attempt) {
      if (attempt == 1) {
        response = model.backend().complete(model.request(prompt), single);
        out.responses.push_back(response);
      }
      try {
        dict = parse_score_dict(response, metrics);
      } catch (const ParseError& e) {
        out.warnings.push_back(std::string("unparseable score response: ") + e.what());
      }
    }
    if (!dict) continue;
    for (auto [name, score] : *dict) {
      if (score < lo || score > hi) {
        out.warnings.push_back("score " + std::to_string(score) + " for " + name + " clamped to [" +
                               std::to_string(lo) + ", " + std::to_string(hi) + "]");
        score = std::clamp(score, lo, hi);
      }
      per_metric[name].push_back(score);
    }
  }
  if (per_metric.empty()) return out;
  ScoreDict medians;
  for (const auto& [name, values] : per_metric) medians[name] = median_score(values);
  out.medians = std::move(medians);
  return out;
}

struct ScoreCollection {
  MetricScoreTable table;
  std::size_t skipped = 0;
  std::vector<std::string> warnings;
};

/// Scores every training reference on the selected metrics and keeps running
/// means. Fails when more than half of the samples cannot be scored.
inline ScoreCollection collect_scores(const TaskDataset& train, const std::vector<MetricId>& metrics,
                                      const DefinitionMap& definitions, std::string_view task_name,
                                      const Generator& model) {
  if (metrics.empty()) throw DataError("no metrics to score");
  if (train.empty()) throw DataError("empty dataset");
  auto per_sample = parallel_map(model.backend(), train.size(), [&](std::size_t i) {
    return score_sample(model, render_scoring_prompt(task_name, train.samples[i], metrics, definitions),
                        metrics);
  });
  ScoreCollection out{MetricScoreTable(metrics), 0, {}};
  for (std::size_t i = 0; i < per_sample.size(); ++i) {
    auto& s = per_sample[i];
    for (auto& w : s.warnings) out.warnings.push_back("sample " + std::to_string(i) + ": " + w);
    if (!s.medians) {
      ++out.skipped;
      out.warnings.push_back("sample " + std::to_string(i) + ": skipped, no parseable scores");
      continue;
    }
    for (const auto& [name, score] : *s.medians) out.table.record(MetricId{name}, score);
  }
  if (out.skipped == train.size() || 2 * out.skipped > train.size()) throw Error("scoring failed");
  for (const auto& e : out.table.entries())
    if (e.count == 0) out.warnings.push_back("metric " + e.metric.name + " received no scores");
  return out;
}

struct MetricGuideline {
  std::string text;
  std::vector<std::string> lines;
  bool from_definitions_only = false;
};

/// Python-like dict with two-decimal means: {Clarity: 4.00, Fluency: 3.50}.
inline std::string format_scores(const MetricScoreTable& scores) {
  std::string out = "{";
  bool first = true;
  for (const auto& e : scores.entries()) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", e.mean);
    if (!first) out += ", ";
    out += e.metric.name + ": " + buf;
    first = false;
  }
  return out + "}";
}

inline std::string render_guideline_prompt(std::string_view task_name,
                                           const std::vector<MetricId>& metrics,
                                           const MetricScoreTable& scores) {
  const std::string list = comma_list(metrics);
  const std::string formatted = format_scores(scores);
  return prompts::render(prompts::kMetricGuideline,
                         {{"{METRICS}", list}, {"{TASK_NAME}", task_name}, {"{SCORES}", formatted}});
}

/// Bullet items of a response, normalised to "- item". Non-bullet lines after
/// an item continue it; text before the first bullet is ignored.
inline std::vector<std::string> parse_bullets(std::string_view response) {
  std::vector<std::string> items;
  for (const auto& raw : str::split_lines(response)) {
    bool bullet = false;
    std::string_view line = detail::strip_bullet(raw, &bullet);
    if (line.empty()) continue;
    if (bullet) {
      items.push_back("- " + std::string(line));
    } else if (!items.empty()) {
      items.back() += " ";
      items.back() += line;
    }
  }
  return items;
}

inline MetricGuideline generate_mg(const std::vector<MetricId>& metrics, const MetricScoreTable& scores,
                                   std::string_view task_name, const Generator& model) {
  for (const auto& m : metrics)
    if (!scores.find(m.name)) throw DataError("no score for metric " + m.name);
  const std::string prompt = render_guideline_prompt(task_name, metrics, scores);
  for (int attempt = 0; attempt < 2; ++attempt) {
    auto items = parse_bullets(model.generate(prompt));
    if (!items.empty()) return {str::join(items, "\n"), items, false};
  }
  throw ParseError("metric guideline response has no bullet points");
}

/// Guideline built from raw definitions, used when score collection is skipped.
inline MetricGuideline mg_from_definitions(const std::vector<MetricId>& metrics,
                                           const DefinitionMap& definitions) {
  MetricGuideline mg;
  mg.from_definitions_only = true;
  for (const auto& m : metrics) {
    auto it = definitions.find(m.name);
    mg.lines.push_back("- " + m.name + ": " +
                       (it != definitions.end() ? it->second : fallback_definition(m.name)));
  }
  mg.text = str::join(mg.lines, "\n");
  return mg;
}

struct OutputConstraintGuideline {
  std::string text;
  LengthStats stats;
};

inline std::string ocg_text(std::string_view response_noun, const LengthStats& s) {
  return "The " + std::string(response_noun) + " must have from " + std::to_string(s.min_s) + " to " +
         std::to_string(s.max_s) + " sentences and from " + std::to_string(s.min_t) + " to " +
         std::to_string(s.max_t) + " words with an average of " + std::to_string(s.avg_t) +
         " words and " + std::to_string(s.avg_s) + " sentences.";
}

inline OutputConstraintGuideline generate_ocg(const TaskDataset& train, std::string_view response_noun,
                                              const SentenceOptions& opts = {}) {
  auto stats = length_stats(train.references(), opts);
  return {ocg_text(response_noun, stats), stats};
}

}  // namespace longguide
