#pragma once

// Multi-run evaluation with reference metrics, optional judge ratings, and
// CSV / Markdown report emission.

#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "longguide/error.hpp"
#include "longguide/judge.hpp"
#include "longguide/pipeline.hpp"
#include "longguide/refmetrics.hpp"
#include "longguide/textstat.hpp"

namespace longguide {

struct SampleRow {
  std::size_t run = 0;
  std::size_t sample = 0;
  double rouge_l = 0.0;
  double bleu_1 = 0.0;
  std::optional<JudgeRatings> judge;
};

struct RunSummary {
  std::string label;
  std::size_t samples = 0;
  double rouge_l = 0.0;
  double bleu_1 = 0.0;
  std::optional<std::array<double, 5>> judge;  // means per criterion
};

struct EvalReport {
  std::vector<SampleRow> rows;
  std::vector<RunSummary> runs;
  MeanInterval rouge_l;
  MeanInterval bleu_1;
  std::optional<std::array<MeanInterval, 5>> judge;
  std::vector<std::string> warnings;
};

/// Judge callback: (record) -> ratings. Empty when judging is disabled.
using JudgeFn = std::function<JudgeRatings(const OutputRecord&)>;

struct NamedRun {
  std::string label;
  std::vector<OutputRecord> records;
};

inline EvalReport evaluate(const std::vector<NamedRun>& runs, const JudgeFn& judge = {}) {
  if (runs.empty()) throw DataError("no runs to evaluate");
  EvalReport rep;
  std::vector<double> rouge_means;
  std::vector<double> bleu_means;
  std::array<std::vector<double>, 5> judge_means;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const auto& run = runs[r];
    if (run.records.empty()) throw DataError(run.label + ": empty outputs file");
    std::vector<double> rouge;
    std::vector<double> bleu;
    std::array<std::vector<double>, 5> judged;
    for (std::size_t i = 0; i < run.records.size(); ++i) {
      const auto& rec = run.records[i];
      const auto cand = tokenize(rec.output);
      const auto ref = tokenize(rec.reference);
      SampleRow row{r, i, rouge_l(cand, ref), bleu_1(cand, ref), std::nullopt};
      if (judge) {
        row.judge = judge(rec);
        const auto v = row.judge->values();
        for (std::size_t k = 0; k < v.size(); ++k) judged[k].push_back(v[k]);
      }
      rouge.push_back(row.rouge_l);
      bleu.push_back(row.bleu_1);
      rep.rows.push_back(std::move(row));
    }
    RunSummary summary{run.label, run.records.size(), mean(rouge), mean(bleu), std::nullopt};
    if (judge) {
      std::array<double, 5> m{};
      for (std::size_t k = 0; k < m.size(); ++k) {
        m[k] = mean(judged[k]);
        judge_means[k].push_back(m[k]);
      }
      summary.judge = m;
    }
    rouge_means.push_back(summary.rouge_l);
    bleu_means.push_back(summary.bleu_1);
    rep.runs.push_back(std::move(summary));
  }
  rep.rouge_l = mean_ci95(rouge_means);
  rep.bleu_1 = mean_ci95(bleu_means);
  if (judge) {
    std::array<MeanInterval, 5> iv;
    for (std::size_t k = 0; k < iv.size(); ++k) iv[k] = mean_ci95(judge_means[k]);
    rep.judge = iv;
  }
  return rep;
}

inline std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

/// Machine-readable report. Per-sample rows first, then one "mean" row per
/// run, then cross-run "mean" and (with two or more runs) "ci95" rows.
inline std::string report_csv(const EvalReport& rep) {
  const bool judged = rep.judge.has_value();
  std::ostringstream out;
  out << "run,sample,rouge_l,bleu_1";
  if (judged)
    for (auto c : kJudgeCriteria) out << ",judge_" << str::to_lower(c);
  out << '\n';
  for (const auto& row : rep.rows) {
    out << rep.runs[row.run].label << ',' << row.sample << ',' << fmt6(row.rouge_l) << ',' << fmt6(row.bleu_1);
    if (row.judge)
      for (int v : row.judge->values()) out << ',' << v;
    out << '\n';
  }
  for (const auto& run : rep.runs) {
    out << run.label << ",mean," << fmt6(run.rouge_l) << ',' << fmt6(run.bleu_1);
    if (run.judge)
      for (double v : *run.judge) out << ',' << fmt6(v);
    out << '\n';
  }
  out << "all,mean," << fmt6(rep.rouge_l.mean) << ',' << fmt6(rep.bleu_1.mean);
  if (judged)
    for (const auto& iv : *rep.judge) out << ',' << fmt6(iv.mean);
  out << '\n';
  if (rep.rouge_l.half_width) {
    out << "all,ci95," << fmt6(*rep.rouge_l.half_width) << ',' << fmt6(*rep.bleu_1.half_width);
    if (judged)
      for (const auto& iv : *rep.judge) out << ',' << fmt6(*iv.half_width);
    out << '\n';
  }
  return out.str();
}

/// Aligned Markdown summary table, one row per metric.
inline std::string report_markdown(const EvalReport& rep) {
  std::vector<std::string> header{"metric"};
  for (const auto& run : rep.runs) header.push_back(run.label);
  header.push_back("mean");
  if (rep.rouge_l.half_width) header.push_back("95% CI");

  std::vector<std::vector<std::string>> rows;
  auto add = [&](const std::string& name, const std::vector<double>& per_run, const MeanInterval& iv) {
    std::vector<std::string> row{name};
    for (double v : per_run) row.push_back(fmt6(v));
    row.push_back(fmt6(iv.mean));
    if (iv.half_width) row.push_back("+/- " + fmt6(*iv.half_width));
    rows.push_back(std::move(row));
  };
  std::vector<double> r;
  std::vector<double> b;
  for (const auto& run : rep.runs) {
    r.push_back(run.rouge_l);
    b.push_back(run.bleu_1);
  }
  add("ROUGE-L (recall)", r, rep.rouge_l);
  add("BLEU-1", b, rep.bleu_1);
  if (rep.judge) {
    for (std::size_t k = 0; k < kJudgeCriteria.size(); ++k) {
      std::vector<double> per;
      for (const auto& run : rep.runs) per.push_back((*run.judge)[k]);
      add("Judge " + std::string(kJudgeCriteria[k]), per, (*rep.judge)[k]);
    }
  }

  std::vector<std::size_t> width(header.size(), 0);
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& row : rows)
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  auto line = [&](const std::vector<std::string>& cells) {
    std::string s = "|";
    for (std::size_t c = 0; c < cells.size(); ++c) s += " " + cells[c] + std::string(width[c] - cells[c].size(), ' ') + " |";
    return s + "\n";
  };
  std::string out = line(header);
  out += "|";
  for (auto w : width) out += std::string(w + 2, '-') + "|";
  out += "\n";
  for (const auto& row : rows) out += line(row);
  return out;
}

}  // namespace longguide
