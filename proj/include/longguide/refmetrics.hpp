#pragma once

// Reference-based text scores and the distribution statistics used to
// compare generated and reference outputs.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "longguide/error.hpp"
#include "longguide/strings.hpp"
#include "longguide/textstat.hpp"

namespace longguide {

enum class RougeMode { Recall, FMeasure };

namespace detail {

inline std::vector<std::string> lowered(const TokenList& tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(str::to_lower(t));
  return out;
}

inline std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace detail

/// ROUGE-L over tokens, case-insensitive. Recall = LCS / |reference|.
inline double rouge_l(const TokenList& candidate, const TokenList& reference,
                      RougeMode mode = RougeMode::Recall) {
  if (reference.empty()) throw DataError("empty reference");
  const auto lcs = static_cast<double>(
      detail::lcs_length(detail::lowered(candidate), detail::lowered(reference)));
  const double recall = lcs / static_cast<double>(reference.size());
  if (mode == RougeMode::Recall) return recall;
  if (lcs == 0.0) return 0.0;
  const double precision = lcs / static_cast<double>(candidate.size());
  return 2.0 * precision * recall / (precision + recall);
}

/// Clipped unigram precision times brevity penalty, case-insensitive.
inline double bleu_1(const TokenList& candidate, const TokenList& reference) {
  if (reference.empty()) throw DataError("empty reference");
  if (candidate.empty()) return 0.0;
  std::unordered_map<std::string, std::size_t> ref_counts;
  for (const auto& t : reference) ++ref_counts[str::to_lower(t)];
  std::unordered_map<std::string, std::size_t> cand_counts;
  for (const auto& t : candidate) ++cand_counts[str::to_lower(t)];
  std::size_t clipped = 0;
  for (const auto& [tok, n] : cand_counts) {
    auto it = ref_counts.find(tok);
    if (it != ref_counts.end()) clipped += std::min(n, it->second);
  }
  const double c = static_cast<double>(candidate.size());
  const double r = static_cast<double>(reference.size());
  const double precision = static_cast<double>(clipped) / c;
  const double bp = std::exp(std::min(0.0, 1.0 - r / c));
  return precision * bp;
}

/// Probability mass over a contiguous integer score support, e.g. {1..5}.
class ScoreHistogram {
 public:
  ScoreHistogram() = default;

  /// Takes bin probabilities directly. Throws DataError unless they are a distribution.
  ScoreHistogram(std::vector<double> bins, int lowest = 1) : bins_(std::move(bins)), lowest_(lowest) {
    if (bins_.empty()) throw DataError("histogram has no bins");
    double sum = 0.0;
    for (double p : bins_) {
      if (!(p >= 0.0)) throw DataError("histogram bin is negative");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw DataError("histogram does not sum to 1");
  }

  /// Empirical distribution of integer scores on [lowest, highest]. No smoothing.
  static ScoreHistogram from_scores(std::span<const int> scores, int lowest = 1, int highest = 5) {
    if (scores.empty()) throw DataError("no scores for histogram");
    if (highest < lowest) throw DataError("invalid histogram support");
    std::vector<double> counts(static_cast<std::size_t>(highest - lowest + 1), 0.0);
    for (int s : scores) {
      if (s < lowest || s > highest) throw DataError("score outside histogram support");
      counts[static_cast<std::size_t>(s - lowest)] += 1.0;
    }
    for (double& c : counts) c /= static_cast<double>(scores.size());
    return ScoreHistogram(std::move(counts), lowest);
  }

  const std::vector<double>& bins() const { return bins_; }
  int lowest() const { return lowest_; }
  std::size_t size() const { return bins_.size(); }

 private:
  std::vector<double> bins_;
  int lowest_ = 1;
};

/// Jensen-Shannon divergence in bits, so the result lies in [0, 1].
inline double js_divergence(const ScoreHistogram& p, const ScoreHistogram& q) {
  if (p.size() != q.size() || p.lowest() != q.lowest())
    throw DataError("histogram supports differ");
  auto term = [](double a, double m) { return a > 0.0 ? a * std::log2(a / m) : 0.0; };
  double js = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double a = p.bins()[i];
    const double b = q.bins()[i];
    const double m = 0.5 * (a + b);
    // each summand is symmetric in (a, b), which makes the total exactly symmetric
    js += 0.5 * term(a, m) + 0.5 * term(b, m);
  }
  return std::clamp(js, 0.0, 1.0);
}

inline double avg_js(std::span<const std::pair<ScoreHistogram, ScoreHistogram>> pairs) {
  if (pairs.empty()) throw DataError("no histogram pairs");
  double sum = 0.0;
  for (const auto& [p, q] : pairs) sum += js_divergence(p, q);
  return sum / static_cast<double>(pairs.size());
}

inline double mean(std::span<const double> xs) {
  if (xs.empty()) throw DataError("mean of empty series");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

/// Sample standard deviation (n - 1 denominator); zero for a single value.
inline double sample_stddev(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

/// Population standard deviation (n denominator).
inline double population_stddev(std::span<const double> xs) {
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size()));
}

/// Sample Pearson correlation coefficient.
inline double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw DataError("series lengths differ");
  if (xs.size() < 2) throw DataError("need at least two points");
  const double mx = mean(xs);
  const double my = mean(ys);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw DataError("zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

struct MeanInterval {
  double mean = 0.0;
  /// Half-width of the two-sided 95% t interval; empty with fewer than two values.
  std::optional<double> half_width;
};

inline MeanInterval mean_ci95(std::span<const double> xs) {
  MeanInterval out;
  out.mean = mean(xs);
  if (xs.size() >= 2) {
    const auto n = static_cast<double>(xs.size());
    boost::math::students_t dist(n - 1.0);
    const double t = boost::math::quantile(boost::math::complement(dist, 0.025));
    out.half_width = t * sample_stddev(xs) / std::sqrt(n);
  }
  return out;
}

}  // namespace longguide
