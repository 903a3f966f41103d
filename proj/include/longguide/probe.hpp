#pragma once

// Property-maintenance probe: do outputs keep a property that every
// demonstration exhibits?

#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "longguide/backend.hpp"
#include "longguide/dataset.hpp"
#include "longguide/error.hpp"
#include "longguide/guidelines.hpp"
#include "longguide/refmetrics.hpp"
#include "longguide/selector.hpp"
#include "longguide/textstat.hpp"

namespace longguide {

inline constexpr std::string_view kTokenProperty = "tokens";
inline constexpr std::string_view kSentenceProperty = "sentences";

struct ProbeConfig {
  /// A metric name judged on 1-5, or "tokens" / "sentences" for counted properties.
  std::string property;
  int shots = 5;
  int target_score = 5;
  int target_tokens = 17;
  int target_sentences = 2;
  bool with_guideline = false;
  bool judge_self_consistency = true;

  bool counted() const { return property == kTokenProperty || property == kSentenceProperty; }
};

struct DemoCandidate {
  Sample sample;
  std::map<std::string, int> scores;  // optional pre-computed judge scores
};

/// Same records as a dataset, with an optional "scores" object per line.
inline std::vector<DemoCandidate> load_demo_pool(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open demo pool " + path.string());
  std::vector<DemoCandidate> pool;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (str::trim(line).empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      DemoCandidate c{{j.at("input").get<std::string>(), j.at("output").get<std::string>()}, {}};
      if (auto it = j.find("scores"); it != j.end())
        for (const auto& [k, v] : it->items()) c.scores[k] = v.get<int>();
      pool.push_back(std::move(c));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ": line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return pool;
}

inline std::string simple_guideline(const ProbeConfig& cfg) {
  if (cfg.property == kTokenProperty)
    return "The output must maintain " + std::to_string(cfg.target_tokens) + " tokens.";
  if (cfg.property == kSentenceProperty)
    return "The output must maintain " + std::to_string(cfg.target_sentences) + " sentences.";
  return "The output must maintain the " + cfg.property + " of the demonstrations.";
}

struct ProbeReport {
  std::string property;
  int shots = 0;
  bool with_guideline = false;
  std::vector<std::size_t> demo_indices;
  std::size_t evaluated = 0;
  std::size_t attained = 0;
  double attainment_pct = 0.0;
  double nt_mean = 0.0;
  double nt_std = 0.0;
  double ns_mean = 0.0;
  double ns_std = 0.0;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::optional<int> judge_property(const Generator& judge, const std::string& task_name, const Sample& s,
                                         const std::string& property, bool self_consistency,
                                         std::vector<std::string>& warnings) {
  const std::vector<MetricId> metric{{property}};
  CallSettings settings = judge.settings();
  if (!self_consistency) settings.sampling.n_samples = 1;
  const Generator g(judge.backend(), settings);
  auto scored = score_sample(g, render_scoring_prompt(task_name, s, metric, {}), metric);
  for (auto& w : scored.warnings) warnings.push_back(std::move(w));
  if (!scored.medians) return std::nullopt;
  auto it = scored.medians->find(property);
  if (it == scored.medians->end()) return std::nullopt;
  return it->second;
}

}  // namespace detail

/// Picks the first `shots` pool entries that attain the target, prompts with
/// them on every eval sample, and measures how many outputs keep the target.
/// Percentages use all eval samples; token and sentence spreads are population
/// standard deviations.
inline ProbeReport probe(const ProbeConfig& cfg, const std::vector<DemoCandidate>& pool, const TaskDataset& eval,
                         const TaskSpec& task, const Generator& generator, const Generator* judge,
                         const SentenceOptions& text = {}) {
  if (cfg.shots < 1) throw ConfigError("shots must be at least 1");
  if (eval.empty()) throw DataError("empty dataset");
  if (!cfg.counted() && !judge) throw ConfigError("metric property " + cfg.property + " needs a judge backend");
  ProbeReport rep;
  rep.property = cfg.property;
  rep.shots = cfg.shots;
  rep.with_guideline = cfg.with_guideline;

  auto attains = [&](const Sample& s, const std::map<std::string, int>* prescored) -> bool {
    if (cfg.property == kTokenProperty) return static_cast<int>(tokenize(s.reference).size()) == cfg.target_tokens;
    if (cfg.property == kSentenceProperty)
      return static_cast<int>(split_sentences(s.reference, text).size()) == cfg.target_sentences;
    if (prescored) {
      for (const auto& [k, v] : *prescored)
        if (str::iequals(k, cfg.property)) return v == cfg.target_score;
    }
    auto score = detail::judge_property(*judge, task.name, s, cfg.property, cfg.judge_self_consistency, rep.warnings);
    return score && *score == cfg.target_score;
  };

  std::vector<Sample> demos;
  for (std::size_t i = 0; i < pool.size() && demos.size() < static_cast<std::size_t>(cfg.shots); ++i) {
    if (attains(pool[i].sample, &pool[i].scores)) {
      demos.push_back(pool[i].sample);
      rep.demo_indices.push_back(i);
    }
  }
  if (demos.size() < static_cast<std::size_t>(cfg.shots)) throw DataError("insufficient demonstrations");

  const std::string demo_text = format_demonstrations(demos);
  const GuidelineBundle empty;
  std::vector<double> nt;
  std::vector<double> ns;
  auto outputs = parallel_map(generator.backend(), eval.size(), [&](std::size_t i) {
    std::string prompt = assemble_prompt(make_parts(task, eval.samples[i], demo_text), VariantTag::None, empty);
    if (cfg.with_guideline) prompt += "\n" + simple_guideline(cfg);
    return generator.generate(prompt);
  });
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const auto& s = eval.samples[i];
    const std::string& output = outputs[i];
    nt.push_back(static_cast<double>(tokenize(output).size()));
    ns.push_back(static_cast<double>(split_sentences(output, text).size()));
    if (attains(Sample{s.input, output}, nullptr)) ++rep.attained;
    ++rep.evaluated;
  }
  rep.attainment_pct = 100.0 * static_cast<double>(rep.attained) / static_cast<double>(rep.evaluated);
  rep.nt_mean = mean(nt);
  rep.nt_std = population_stddev(nt);
  rep.ns_mean = mean(ns);
  rep.ns_std = population_stddev(ns);
  return rep;
}

inline std::string probe_report_markdown(const ProbeReport& r) {
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };
  std::ostringstream out;
  out << "| property | shots | guideline | evaluated | attained | % | NT mean | NT std | NS mean | NS std |\n"
      << "|---|---|---|---|---|---|---|---|---|---|\n"
      << "| " << r.property << " | " << r.shots << " | " << (r.with_guideline ? "yes" : "no") << " | "
      << r.evaluated << " | " << r.attained << " | " << num(r.attainment_pct) << " | " << num(r.nt_mean)
      << " | " << num(r.nt_std) << " | " << num(r.ns_mean) << " | " << num(r.ns_std) << " |\n";
  return out.str();
}

}  // namespace longguide
