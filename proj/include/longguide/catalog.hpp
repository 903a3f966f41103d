#pragma once

// The reference-free metric pool and metric selection over sampled batches.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "longguide/backend.hpp"
#include "longguide/dataset.hpp"
#include "longguide/error.hpp"
#include "longguide/prompts.hpp"
#include "longguide/strings.hpp"

namespace longguide {

struct MetricId {
  std::string name;

  friend bool operator==(const MetricId& a, const MetricId& b) { return str::iequals(a.name, b.name); }
};

/// Orders metric ids alphabetically, ignoring case.
struct MetricLess {
  bool operator()(const MetricId& a, const MetricId& b) const { return str::iless(a.name, b.name); }
};

inline std::vector<MetricId> builtin_catalog() {
  static const char* const kNames[] = {
      // communication basics
      "Accuracy", "Brevity", "Clarity",
      // BARTScore
      "Relevance", "Coherence",
      // GPTScore
      "Semantic Coverage", "Factuality", "Fluency", "Informativeness", "Consistency", "Engagement",
      "Specificity", "Correctness", "Understandability", "Diversity",
      // additional coverage
      "Completeness", "Conciseness", "Neutrality", "Naturalness", "Readability", "Creativity",
      "Rationalness", "Truthfulness", "Respect of Chronology", "Non-repetitiveness",
      "Indicativeness", "Resolution"};
  std::vector<MetricId> out;
  for (const char* n : kNames) out.push_back({n});
  return out;
}

class MetricCatalog {
 public:
  MetricCatalog() : metrics_(builtin_catalog()) {}
  explicit MetricCatalog(std::vector<MetricId> metrics) {
    for (auto& m : metrics) add(std::move(m));
  }

  /// Appends a metric; names already present (ignoring case) are rejected.
  void add(MetricId metric) {
    if (str::trim(metric.name).empty()) throw ConfigError("metric name is empty");
    if (find(metric.name)) throw ConfigError("duplicate metric " + metric.name);
    metrics_.push_back(std::move(metric));
  }

  std::optional<MetricId> find(std::string_view name) const {
    const auto trimmed = str::trim(name);
    for (const auto& m : metrics_)
      if (str::iequals(m.name, trimmed)) return m;
    return std::nullopt;
  }

  bool contains(std::string_view name) const { return find(name).has_value(); }
  const std::vector<MetricId>& metrics() const { return metrics_; }
  std::size_t size() const { return metrics_.size(); }

 private:
  std::vector<MetricId> metrics_;
};

/// Python repr of a list of names: ['A', 'B'].
inline std::string python_list(const std::vector<MetricId>& metrics) {
  std::string out = "[";
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    if (i) out += ", ";
    out += "'" + metrics[i].name + "'";
  }
  return out + "]";
}

struct ParsedMetricList {
  std::vector<MetricId> metrics;  // catalog spelling, response order, no duplicates
  std::vector<std::string> unknown;
};

/// Reads the first [...] list in a response and keeps the names found in the catalog.
inline ParsedMetricList parse_metric_list(std::string_view text, const MetricCatalog& catalog) {
  const auto open = text.find('[');
  const auto close = open == std::string_view::npos ? open : text.find(']', open + 1);
  if (close == std::string_view::npos) throw ParseError("no bracketed list in response");
  std::string_view body = text.substr(open + 1, close - open - 1);
  ParsedMetricList out;
  std::size_t start = 0;
  while (start <= body.size()) {
    auto comma = body.find(',', start);
    if (comma == std::string_view::npos) comma = body.size();
    std::string_view item = str::trim(body.substr(start, comma - start));
    while (!item.empty() && (item.front() == '\'' || item.front() == '"')) item.remove_prefix(1);
    while (!item.empty() && (item.back() == '\'' || item.back() == '"')) item.remove_suffix(1);
    item = str::trim(item);
    if (!item.empty()) {
      if (auto m = catalog.find(item)) {
        if (std::find(out.metrics.begin(), out.metrics.end(), *m) == out.metrics.end())
          out.metrics.push_back(*m);
      } else {
        out.unknown.emplace_back(item);
      }
    }
    start = comma + 1;
  }
  return out;
}

struct SelectionConfig {
  int iterations = 5;
  int batch_size = 5;
  int top_k = 5;
  std::uint64_t seed = 0;

  void validate() const {
    if (iterations < 1) throw ConfigError("iterations must be at least 1");
    if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
    if (top_k < 1) throw ConfigError("top_k must be at least 1");
  }
};

struct SelectionIteration {
  int iteration = 0;
  std::vector<std::size_t> batch;
  std::vector<std::string> responses;  // two entries when the first failed to parse
  std::vector<MetricId> accepted;      // after catalog intersection and truncation
};

struct SelectedMetrics {
  std::vector<MetricId> metrics;
  std::vector<SelectionIteration> log;
  std::vector<std::string> warnings;
};

inline std::string render_selection_prompt(std::string_view task_name, const MetricCatalog& catalog,
                                           const std::vector<Sample>& batch, int top_k) {
  const std::string top = std::to_string(top_k);
  const std::string list = python_list(catalog.metrics());
  const std::string demos = format_demonstrations(batch);
  return prompts::render(prompts::kSelectMetrics, {{"{TOP_K}", top},
                                                   {"{TASK_NAME}", task_name},
                                                   {"{METRIC_LIST}", list},
                                                   {"{DEMONSTRATION_STRING}", demos}});
}

/// Asks the model for its most important metrics on K random batches and
/// returns the alphabetically sorted union of the answers.
inline SelectedMetrics select_metrics(const TaskDataset& train, std::string_view task_name,
                                      const SelectionConfig& cfg, const MetricCatalog& catalog,
                                      const Generator& model) {
  cfg.validate();
  if (train.empty()) throw DataError("empty dataset");
  SelectedMetrics out;
  std::mt19937_64 rng(cfg.seed);
  for (int it = 1; it <= cfg.iterations; ++it) {
    SelectionIteration rec;
    rec.iteration = it;
    rec.batch = sample_without_replacement(rng, train.size(), static_cast<std::size_t>(cfg.batch_size));
    std::vector<Sample> batch;
    for (auto i : rec.batch) batch.push_back(train.samples[i]);
    const std::string prompt = render_selection_prompt(task_name, catalog, batch, cfg.top_k);

    std::optional<ParsedMetricList> parsed;
    for (int attempt = 0; attempt < 2 && !parsed; ++attempt) {
      rec.responses.push_back(model.generate(prompt));
      try {
        parsed = parse_metric_list(rec.responses.back(), catalog);
      } catch (const ParseError& e) {
        out.warnings.push_back("selection iteration " + std::to_string(it) + ": " + e.what());
      }
    }
    if (parsed) {
      for (const auto& u : parsed->unknown)
        out.warnings.push_back("selection iteration " + std::to_string(it) + ": unknown metric '" +
                               u + "' dropped");
      rec.accepted = parsed->metrics;
      if (rec.accepted.size() > static_cast<std::size_t>(cfg.top_k)) {
        out.warnings.push_back("selection iteration " + std::to_string(it) + ": truncated " +
                               std::to_string(rec.accepted.size()) + " metrics to top " +
                               std::to_string(cfg.top_k));
        rec.accepted.resize(static_cast<std::size_t>(cfg.top_k));
      }
      for (const auto& m : rec.accepted)
        if (std::find(out.metrics.begin(), out.metrics.end(), m) == out.metrics.end())
          out.metrics.push_back(m);
    }
    out.log.push_back(std::move(rec));
  }
  if (out.metrics.empty()) throw Error("selection failed");
  std::sort(out.metrics.begin(), out.metrics.end(), MetricLess{});
  return out;
}

}  // namespace longguide
