#pragma once

// The portable guideline bundle and its JSON form.

#include <array>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "longguide/catalog.hpp"
#include "longguide/error.hpp"
#include "longguide/guidelines.hpp"
#include "longguide/strings.hpp"

namespace longguide {

/// Declaration order is also the tie-break order: on equal validation
/// scores the variant with less prompt overhead wins.
enum class VariantTag { None = 0, Ocg = 1, Mg = 2, MgOcg = 3 };

inline constexpr std::array<VariantTag, 4> kAllVariants{VariantTag::None, VariantTag::Ocg,
                                                        VariantTag::Mg, VariantTag::MgOcg};

inline std::string_view to_string(VariantTag v) {
  switch (v) {
    case VariantTag::None: return "none";
    case VariantTag::Ocg: return "ocg";
    case VariantTag::Mg: return "mg";
    case VariantTag::MgOcg: return "mg-ocg";
  }
  return "none";
}

inline VariantTag parse_variant(std::string_view s) {
  for (auto v : kAllVariants)
    if (str::iequals(s, to_string(v))) return v;
  if (str::iequals(s, "mg_ocg")) return VariantTag::MgOcg;
  throw ConfigError("unknown variant '" + std::string(s) + "' (expected none, ocg, mg or mg-ocg)");
}

inline constexpr int kBundleSchemaVersion = 1;

struct GuidelineBundle {
  std::string task_name;
  std::string instruction;
  std::string response_noun = "response";
  std::string model;
  std::string created_at;

  std::vector<MetricId> metrics;
  DefinitionMap definitions;
  std::optional<MetricScoreTable> scores;
  std::optional<MetricGuideline> mg;
  std::optional<OutputConstraintGuideline> ocg;

  VariantTag selected = VariantTag::None;
  std::array<std::optional<double>, 4> variant_scores{};

  std::vector<SelectionIteration> selection_log;
  nlohmann::json settings = nlohmann::json::object();
  std::vector<std::string> warnings;

  std::optional<double> score(VariantTag v) const { return variant_scores[static_cast<std::size_t>(v)]; }
};

inline nlohmann::json to_json(const GuidelineBundle& b) {
  using nlohmann::json;
  json j;
  j["schema"] = "longguide.bundle";
  j["schema_version"] = kBundleSchemaVersion;
  j["created_at"] = b.created_at;
  j["model"] = b.model;
  j["task"] = {{"name", b.task_name}, {"instruction", b.instruction}, {"response_noun", b.response_noun}};
  j["selected_variant"] = to_string(b.selected);
  json scores = json::object();
  for (auto v : kAllVariants)
    if (auto s = b.score(v)) scores[std::string(to_string(v))] = *s;
  j["variant_scores"] = scores;

  json metrics = json::array();
  for (const auto& m : b.metrics) metrics.push_back(m.name);
  j["metrics"] = metrics;
  j["definitions"] = b.definitions;

  if (b.scores) {
    json table = json::array();
    for (const auto& e : b.scores->entries())
      table.push_back({{"metric", e.metric.name}, {"mean", e.mean}, {"count", e.count}, {"scores", e.scores}});
    j["metric_scores"] = table;
  } else {
    j["metric_scores"] = nullptr;
  }
  if (b.mg) {
    j["mg"] = {{"text", b.mg->text}, {"lines", b.mg->lines}, {"from_definitions_only", b.mg->from_definitions_only}};
  } else {
    j["mg"] = nullptr;
  }
  if (b.ocg) {
    const auto& s = b.ocg->stats;
    j["ocg"] = {{"text", b.ocg->text},
                {"stats",
                 {{"min_s", s.min_s}, {"max_s", s.max_s}, {"avg_s", s.avg_s},
                  {"min_t", s.min_t}, {"max_t", s.max_t}, {"avg_t", s.avg_t}}}};
  } else {
    j["ocg"] = nullptr;
  }

  json log = json::array();
  for (const auto& it : b.selection_log) {
    json accepted = json::array();
    for (const auto& m : it.accepted) accepted.push_back(m.name);
    log.push_back({{"iteration", it.iteration}, {"batch", it.batch}, {"responses", it.responses},
                   {"accepted", accepted}});
  }
  j["provenance"] = {{"settings", b.settings}, {"selection", log}, {"warnings", b.warnings}};
  return j;
}

inline GuidelineBundle bundle_from_json(const nlohmann::json& j) {
  GuidelineBundle b;
  try {
    if (j.at("schema").get<std::string>() != "longguide.bundle")
      throw ConfigError("not a guideline bundle");
    const int version = j.at("schema_version").get<int>();
    if (version != kBundleSchemaVersion)
      throw ConfigError("unsupported bundle schema version " + std::to_string(version));
    b.created_at = j.at("created_at").get<std::string>();
    b.model = j.at("model").get<std::string>();
    const auto& task = j.at("task");
    b.task_name = task.at("name").get<std::string>();
    b.instruction = task.at("instruction").get<std::string>();
    b.response_noun = task.at("response_noun").get<std::string>();
    b.selected = parse_variant(j.at("selected_variant").get<std::string>());
    for (const auto& [key, value] : j.at("variant_scores").items())
      b.variant_scores[static_cast<std::size_t>(parse_variant(key))] = value.get<double>();
    for (const auto& m : j.at("metrics")) b.metrics.push_back({m.get<std::string>()});
    b.definitions = j.at("definitions").get<DefinitionMap>();
    if (!j.at("metric_scores").is_null()) {
      MetricScoreTable table;
      for (const auto& e : j.at("metric_scores")) {
        table.entries().push_back({{e.at("metric").get<std::string>()},
                                   e.at("mean").get<double>(),
                                   e.at("count").get<std::size_t>(),
                                   e.at("scores").get<std::vector<double>>()});
      }
      b.scores = std::move(table);
    }
    if (!j.at("mg").is_null()) {
      const auto& mg = j.at("mg");
      b.mg = MetricGuideline{mg.at("text").get<std::string>(), mg.at("lines").get<std::vector<std::string>>(),
                             mg.at("from_definitions_only").get<bool>()};
    }
    if (!j.at("ocg").is_null()) {
      const auto& ocg = j.at("ocg");
      const auto& s = ocg.at("stats");
      b.ocg = OutputConstraintGuideline{
          ocg.at("text").get<std::string>(),
          LengthStats{s.at("min_s").get<std::int64_t>(), s.at("max_s").get<std::int64_t>(),
                      s.at("avg_s").get<std::int64_t>(), s.at("min_t").get<std::int64_t>(),
                      s.at("max_t").get<std::int64_t>(), s.at("avg_t").get<std::int64_t>()}};
    }
    const auto& prov = j.at("provenance");
    b.settings = prov.at("settings");
    for (const auto& it : prov.at("selection")) {
      SelectionIteration rec;
      rec.iteration = it.at("iteration").get<int>();
      rec.batch = it.at("batch").get<std::vector<std::size_t>>();
      rec.responses = it.at("responses").get<std::vector<std::string>>();
      for (const auto& m : it.at("accepted")) rec.accepted.push_back({m.get<std::string>()});
      b.selection_log.push_back(std::move(rec));
    }
    b.warnings = prov.at("warnings").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed bundle: ") + e.what());
  }
  if (b.selected == VariantTag::Mg || b.selected == VariantTag::MgOcg) {
    if (!b.mg) throw ConfigError("bundle selects a metric guideline it does not contain");
  }
  if (b.selected == VariantTag::Ocg || b.selected == VariantTag::MgOcg) {
    if (!b.ocg) throw ConfigError("bundle selects an output constraint it does not contain");
  }
  return b;
}

inline void save_bundle(const GuidelineBundle& b, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write bundle " + path.string());
  out << to_json(b).dump(2) << '\n';
}

inline GuidelineBundle load_bundle(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open bundle " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bundle " + path.string() + ": " + e.what());
  }
  return bundle_from_json(j);
}

}  // namespace longguide
