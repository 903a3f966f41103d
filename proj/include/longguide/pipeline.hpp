#pragma once

// End-to-end guideline learning and guided inference.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "longguide/backend.hpp"
#include "longguide/bundle.hpp"
#include "longguide/catalog.hpp"
#include "longguide/config.hpp"
#include "longguide/dataset.hpp"
#include "longguide/error.hpp"
#include "longguide/guidelines.hpp"
#include "longguide/prompts.hpp"
#include "longguide/selector.hpp"

namespace longguide {

/// Error from one learning step; the message is prefixed with the step label.
class StepError : public Error {
 public:
  StepError(const std::string& step, const std::string& what) : Error(step + ": " + what) {}
};

template <typename Fn>
auto run_step(const char* label, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw StepError(label, e.what());
  }
}

struct LearnOptions {
  std::string created_at = "1970-01-01T00:00:00Z";
};

inline nlohmann::json settings_snapshot(const Config& cfg, const CallSettings& calls, std::size_t train_size) {
  const auto& s = cfg.learn.selection;
  return {{"iterations", s.iterations},
          {"batch_size", s.batch_size},
          {"top_k", s.top_k},
          {"seed", s.seed},
          {"self_consistency", calls.sampling.n_samples},
          {"train_cap", cfg.learn.train_cap},
          {"train_size", train_size},
          {"skip_step2", cfg.learn.skip_step2},
          {"variants", cfg.learn.variants},
          {"prompt_version", prompts::kVersion},
          {"system_prompt", calls.system ? nlohmann::json(*calls.system) : nlohmann::json(nullptr)},
          {"temperature", calls.greedy.temperature},
          {"sc_temperature", calls.sampling.temperature},
          {"top_p", calls.greedy.top_p},
          {"max_new_tokens", calls.greedy.max_new_tokens}};
}

/// Learns metric and output-constraint guidelines from `train` and picks the
/// best variant on the same data.
inline GuidelineBundle learn(const Config& cfg, const TaskDataset& train, const Generator& model,
                             const LearnOptions& opts = {}) {
  if (train.empty()) throw DataError("empty dataset");
  GuidelineBundle b;
  b.task_name = cfg.task.name;
  b.instruction = cfg.task.instruction;
  b.response_noun = cfg.task.response_noun;
  b.model = model.backend().model_name();
  b.created_at = opts.created_at;
  b.settings = settings_snapshot(cfg, model.settings(), train.size());
  b.warnings = train.warnings;

  const bool full = cfg.learn.variants == "all";
  if (full) {
    const auto catalog = cfg.catalog();
    auto selected = run_step("step 1 (metric selection)", [&] {
      return select_metrics(train, cfg.task.name, cfg.learn.selection, catalog, model);
    });
    b.metrics = selected.metrics;
    b.selection_log = std::move(selected.log);
    b.warnings.insert(b.warnings.end(), selected.warnings.begin(), selected.warnings.end());

    auto defs = run_step("step 2 (metric definitions)",
                         [&] { return fetch_definitions(b.metrics, cfg.task.name, model); });
    b.definitions = defs.text;
    b.warnings.insert(b.warnings.end(), defs.warnings.begin(), defs.warnings.end());

    if (cfg.learn.skip_step2) {
      b.mg = mg_from_definitions(b.metrics, b.definitions);
    } else {
      auto collected = run_step("step 2 (score collection)", [&] {
        return collect_scores(train, b.metrics, b.definitions, cfg.task.name, model);
      });
      b.warnings.insert(b.warnings.end(), collected.warnings.begin(), collected.warnings.end());
      b.scores = std::move(collected.table);
      b.mg = run_step("step 3 (metric guideline)",
                      [&] { return generate_mg(b.metrics, *b.scores, cfg.task.name, model); });
    }
  }

  b.ocg = run_step("step 4 (output constraint guideline)",
                   [&] { return generate_ocg(train, cfg.task.response_noun, cfg.text); });

  static constexpr std::array<VariantTag, 2> kOcgOnly{VariantTag::None, VariantTag::Ocg};
  std::span<const VariantTag> variants = full ? std::span<const VariantTag>(kAllVariants)
                                              : std::span<const VariantTag>(kOcgOnly);
  run_step("step 5 (variant selection)", [&] {
    select_best(b, train, cfg.task, model, variants, cfg.learn.validation_metric);
    return 0;
  });
  return b;
}

struct OutputRecord {
  std::string input;
  std::string reference;
  std::string output;
};

inline void write_outputs(const std::vector<OutputRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write outputs " + path.string());
  for (const auto& r : records) {
    nlohmann::json j{{"input", r.input}, {"reference", r.reference}, {"output", r.output}};
    out << j.dump() << '\n';
  }
}

inline std::vector<OutputRecord> read_outputs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open outputs " + path.string());
  std::vector<OutputRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (str::trim(line).empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      records.push_back({j.at("input").get<std::string>(), j.at("reference").get<std::string>(),
                         j.at("output").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ": line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (records.empty()) throw DataError(path.string() + ": empty outputs file");
  return records;
}

struct InferOptions {
  std::optional<VariantTag> variant;  // overrides the bundle's choice
  std::vector<Sample> demo_pool;
  std::size_t shots = 0;
  std::uint64_t seed = 0;
};

struct InferResult {
  std::vector<OutputRecord> records;
  std::vector<std::size_t> demo_indices;
  VariantTag variant = VariantTag::None;
  std::vector<std::string> warnings;
};

/// Generates one output per sample with the bundle's guideline. `shots`
/// demonstrations are drawn once from the pool with the given seed and
/// shared by every prompt.
inline InferResult infer(const TaskSpec& task, const GuidelineBundle& bundle, const TaskDataset& dataset,
                         const Generator& model, const InferOptions& opts = {}) {
  InferResult out;
  out.variant = opts.variant.value_or(bundle.selected);
  guideline_text(out.variant, bundle);  // fails early when the bundle lacks the text

  std::string demos;
  if (opts.shots > 0) {
    if (opts.shots > opts.demo_pool.size())
      throw DataError("requested " + std::to_string(opts.shots) + " shots but the demo pool has " +
                      std::to_string(opts.demo_pool.size()));
    std::mt19937_64 rng(opts.seed);
    out.demo_indices = sample_without_replacement(rng, opts.demo_pool.size(), opts.shots);
    std::vector<Sample> chosen;
    for (auto i : out.demo_indices) chosen.push_back(opts.demo_pool[i]);
    demos = format_demonstrations(chosen);
  }

  struct Row {
    std::string output;
    std::string warning;
  };
  auto rows = parallel_map(model.backend(), dataset.size(), [&](std::size_t i) {
    const auto& s = dataset.samples[i];
    const auto prompt = assemble_prompt(make_parts(task, s, demos), out.variant, bundle);
    try {
      return Row{model.generate(prompt), {}};
    } catch (const AuthError&) {
      throw;
    } catch (const Error& e) {
      return Row{{}, "sample " + std::to_string(i) + ": " + e.what()};
    }
  });
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.records.push_back({dataset.samples[i].input, dataset.samples[i].reference, std::move(rows[i].output)});
    if (!rows[i].warning.empty()) out.warnings.push_back(std::move(rows[i].warning));
  }
  return out;
}

}  // namespace longguide
