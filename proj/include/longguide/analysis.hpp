#pragma once

// Property-transfer analysis: judge-score distributions of generated versus
// reference outputs, compared per metric with Jensen-Shannon divergence.

#include <cstddef>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "longguide/bundle.hpp"
#include "longguide/error.hpp"
#include "longguide/evaluate.hpp"
#include "longguide/guidelines.hpp"
#include "longguide/pipeline.hpp"
#include "longguide/refmetrics.hpp"

namespace longguide {

struct MetricDivergence {
  std::string metric;
  ScoreHistogram generated;
  ScoreHistogram reference;
  double js = 0.0;
};

struct GroupDivergence {
  std::string label;
  std::vector<MetricDivergence> metrics;
  double avg_js = 0.0;
  double rouge_l = 0.0;
  double bleu_1 = 0.0;
};

struct JsReport {
  std::vector<GroupDivergence> groups;
  /// Correlation of Avg.JS with the reference metrics across groups; empty
  /// with fewer than two groups or a constant series.
  std::optional<double> pearson_rouge_l;
  std::optional<double> pearson_bleu_1;
  std::vector<std::string> warnings;
};

/// Per-metric JS between judge scores of generated outputs and of references.
/// Every text is scored with the self-evaluation prompt and the median of the
/// judge's self-consistency samples.
inline JsReport analyze_js(const std::vector<NamedRun>& groups, const GuidelineBundle& bundle,
                           const Generator& judge) {
  if (bundle.metrics.empty()) throw DataError("bundle lists no metrics");
  if (groups.empty()) throw DataError("no outputs to analyze");
  JsReport rep;
  for (const auto& group : groups) {
    if (group.records.empty()) throw DataError(group.label + ": empty outputs file");
    std::map<std::string, std::vector<int>> gen_scores;
    std::map<std::string, std::vector<int>> ref_scores;
    auto score_text = [&](const OutputRecord& rec, const std::string& text) {
      const Sample s{rec.input, text};
      auto scored = score_sample(judge, render_scoring_prompt(bundle.task_name, s, bundle.metrics, bundle.definitions),
                                 bundle.metrics);
      return scored;
    };
    struct Pair {
      SampleScores generated;
      SampleScores reference;
    };
    auto judged = parallel_map(judge.backend(), group.records.size(), [&](std::size_t i) {
      const auto& rec = group.records[i];
      return Pair{score_text(rec, rec.output), score_text(rec, rec.reference)};
    });
    for (std::size_t i = 0; i < judged.size(); ++i) {
      for (auto* side : {&judged[i].generated, &judged[i].reference}) {
        for (auto& w : side->warnings) rep.warnings.push_back(group.label + " sample " + std::to_string(i) + ": " + w);
      }
      if (!judged[i].generated.medians || !judged[i].reference.medians) {
        rep.warnings.push_back(group.label + " sample " + std::to_string(i) + ": unscorable, excluded");
        continue;
      }
      for (const auto& m : bundle.metrics) {
        auto g = judged[i].generated.medians->find(m.name);
        auto r = judged[i].reference.medians->find(m.name);
        if (g == judged[i].generated.medians->end() || r == judged[i].reference.medians->end()) {
          rep.warnings.push_back(group.label + " sample " + std::to_string(i) + ": no " + m.name + " score");
          continue;
        }
        gen_scores[m.name].push_back(g->second);
        ref_scores[m.name].push_back(r->second);
      }
    }

    GroupDivergence gd;
    gd.label = group.label;
    std::vector<std::pair<ScoreHistogram, ScoreHistogram>> pairs;
    for (const auto& m : bundle.metrics) {
      if (gen_scores[m.name].empty()) {
        rep.warnings.push_back(group.label + ": metric " + m.name + " has no scores, skipped");
        continue;
      }
      auto gh = ScoreHistogram::from_scores(gen_scores[m.name]);
      auto rh = ScoreHistogram::from_scores(ref_scores[m.name]);
      const double js = js_divergence(gh, rh);
      gd.metrics.push_back({m.name, gh, rh, js});
      pairs.emplace_back(std::move(gh), std::move(rh));
    }
    if (pairs.empty()) throw Error(group.label + ": no metric could be scored");
    gd.avg_js = avg_js(pairs);
    auto ev = evaluate({group});
    gd.rouge_l = ev.rouge_l.mean;
    gd.bleu_1 = ev.bleu_1.mean;
    rep.groups.push_back(std::move(gd));
  }

  if (rep.groups.size() >= 2) {
    std::vector<double> js;
    std::vector<double> rouge;
    std::vector<double> bleu;
    for (const auto& g : rep.groups) {
      js.push_back(g.avg_js);
      rouge.push_back(g.rouge_l);
      bleu.push_back(g.bleu_1);
    }
    auto safe = [&](const std::vector<double>& ys) -> std::optional<double> {
      try {
        return pearson(js, ys);
      } catch (const DataError& e) {
        rep.warnings.push_back(std::string("pearson: ") + e.what());
        return std::nullopt;
      }
    };
    rep.pearson_rouge_l = safe(rouge);
    rep.pearson_bleu_1 = safe(bleu);
  }
  return rep;
}

inline std::string js_report_csv(const JsReport& rep) {
  std::ostringstream out;
  out << "group,metric,js\n";
  for (const auto& g : rep.groups) {
    for (const auto& m : g.metrics) out << g.label << ',' << m.metric << ',' << fmt6(m.js) << '\n';
    out << g.label << ",avg_js," << fmt6(g.avg_js) << '\n';
    out << g.label << ",rouge_l," << fmt6(g.rouge_l) << '\n';
    out << g.label << ",bleu_1," << fmt6(g.bleu_1) << '\n';
  }
  auto opt = [](const std::optional<double>& v) { return v ? fmt6(*v) : std::string("n/a"); };
  if (rep.groups.size() >= 2) {
    out << "all,pearson_avg_js_rouge_l," << opt(rep.pearson_rouge_l) << '\n';
    out << "all,pearson_avg_js_bleu_1," << opt(rep.pearson_bleu_1) << '\n';
  }
  return out.str();
}

}  // namespace longguide
