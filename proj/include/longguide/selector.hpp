#pragma once

// Prompt assembly and validation-based choice among guideline variants.

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "longguide/backend.hpp"
#include "longguide/bundle.hpp"
#include "longguide/dataset.hpp"
#include "longguide/error.hpp"
#include "longguide/refmetrics.hpp"
#include "longguide/textstat.hpp"

namespace longguide {

struct PromptParts {
  std::string instruction;
  std::string demonstrations;  // empty for zero-shot
  std::string context;
  std::string query;
};

struct TaskSpec {
  std::string name;
  std::string instruction;
  std::string context;
  std::string response_noun = "response";
};

inline PromptParts make_parts(const TaskSpec& task, const Sample& sample, std::string demonstrations = {}) {
  return {task.instruction, std::move(demonstrations), task.context, sample.input};
}

/// Guideline text a variant appends; the metric guideline precedes the output constraint.
inline std::string guideline_text(VariantTag variant, const GuidelineBundle& bundle) {
  auto need_mg = [&]() -> const std::string& {
    if (!bundle.mg) throw DataError("variant " + std::string(to_string(variant)) + " needs a metric guideline");
    return bundle.mg->text;
  };
  auto need_ocg = [&]() -> const std::string& {
    if (!bundle.ocg)
      throw DataError("variant " + std::string(to_string(variant)) + " needs an output constraint guideline");
    return bundle.ocg->text;
  };
  switch (variant) {
    case VariantTag::None: return {};
    case VariantTag::Ocg: return need_ocg();
    case VariantTag::Mg: return need_mg();
    case VariantTag::MgOcg: return need_mg() + "\n" + need_ocg();
  }
  return {};
}

/// Newline-joins instruction, demonstrations, context, query and guideline,
/// leaving out empty sections entirely.
inline std::string assemble_prompt(const PromptParts& parts, VariantTag variant, const GuidelineBundle& bundle) {
  if (parts.instruction.empty()) throw DataError("empty instruction");
  if (parts.query.empty()) throw DataError("empty query");
  const std::string guideline = guideline_text(variant, bundle);
  std::vector<std::string> sections;
  for (const std::string* s : {&parts.instruction, &parts.demonstrations, &parts.context, &parts.query, &guideline})
    if (!s->empty()) sections.push_back(*s);
  return str::join(sections, "\n");
}

enum class ValidationMetric { RougeLRecall, RougeLF, Bleu1 };

inline ValidationMetric parse_validation_metric(std::string_view s) {
  if (s == "rouge-l" || s == "rouge-l-recall") return ValidationMetric::RougeLRecall;
  if (s == "rouge-l-f") return ValidationMetric::RougeLF;
  if (s == "bleu-1") return ValidationMetric::Bleu1;
  throw ConfigError("unknown validation metric '" + std::string(s) + "'");
}

inline double validation_score(ValidationMetric metric, const std::string& output, const std::string& reference) {
  const auto cand = tokenize(output);
  const auto ref = tokenize(reference);
  switch (metric) {
    case ValidationMetric::RougeLRecall: return rouge_l(cand, ref);
    case ValidationMetric::RougeLF: return rouge_l(cand, ref, RougeMode::FMeasure);
    case ValidationMetric::Bleu1: return bleu_1(cand, ref);
  }
  return 0.0;
}

struct VariantEvaluation {
  VariantTag variant = VariantTag::None;
  double mean = 0.0;
  std::vector<double> per_sample;
  std::vector<std::string> warnings;
};

/// Generates an output for every training sample under one variant and
/// averages the validation metric. A sample whose generation fails at the
/// transport or parse level scores 0.
inline VariantEvaluation score_variant(VariantTag variant, const GuidelineBundle& bundle, const TaskDataset& train,
                                       const TaskSpec& task, const Generator& model,
                                       ValidationMetric metric = ValidationMetric::RougeLRecall,
                                       const std::string& demonstrations = {}) {
  if (train.empty()) throw DataError("empty dataset");
  VariantEvaluation out;
  out.variant = variant;
  struct Row {
    double score = 0.0;
    std::string warning;
  };
  auto rows = parallel_map(model.backend(), train.size(), [&](std::size_t i) {
    const auto& sample = train.samples[i];
    const std::string prompt = assemble_prompt(make_parts(task, sample, demonstrations), variant, bundle);
    try {
      return Row{validation_score(metric, model.generate(prompt), sample.reference), {}};
    } catch (const TransportError& e) {
      return Row{0.0, std::string(to_string(variant)) + " sample " + std::to_string(i) + ": " + e.what()};
    } catch (const ParseError& e) {
      return Row{0.0, std::string(to_string(variant)) + " sample " + std::to_string(i) + ": " + e.what()};
    }
  });
  for (auto& r : rows) {
    out.per_sample.push_back(r.score);
    if (!r.warning.empty()) out.warnings.push_back(std::move(r.warning));
  }
  out.mean = mean(out.per_sample);
  return out;
}

/// Index of the best score; earlier entries win ties.
inline VariantTag argmax_variant(const std::array<std::optional<double>, 4>& scores) {
  std::optional<VariantTag> best;
  for (auto v : kAllVariants) {
    const auto& s = scores[static_cast<std::size_t>(v)];
    if (!s) continue;
    if (!best || *s > *scores[static_cast<std::size_t>(*best)]) best = v;
  }
  if (!best) throw DataError("no variant was scored");
  return *best;
}

/// Scores each requested variant on the training data (in the given order)
/// and records the winner in the bundle.
inline void select_best(GuidelineBundle& bundle, const TaskDataset& train, const TaskSpec& task,
                        const Generator& model, std::span<const VariantTag> variants = kAllVariants,
                        ValidationMetric metric = ValidationMetric::RougeLRecall) {
  bundle.variant_scores = {};
  for (auto v : variants) {
    auto eval = score_variant(v, bundle, train, task, model, metric);
    bundle.variant_scores[static_cast<std::size_t>(v)] = eval.mean;
    for (auto& w : eval.warnings) bundle.warnings.push_back(std::move(w));
  }
  bundle.selected = argmax_variant(bundle.variant_scores);
}

}  // namespace longguide
