#pragma once

// Reference-aligned judging on five 1-10 criteria.

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "longguide/backend.hpp"
#include "longguide/error.hpp"
#include "longguide/guidelines.hpp"
#include "longguide/prompts.hpp"
#include "longguide/strings.hpp"

namespace longguide {

struct JudgeRatings {
  int format = 0;
  int content = 0;
  int factuality = 0;
  int style = 0;
  int quality = 0;
  std::string explanation;

  std::array<int, 5> values() const { return {format, content, factuality, style, quality}; }
};

inline constexpr std::array<std::string_view, 5> kJudgeCriteria{"Format", "Content", "Factuality", "Style",
                                                                "Quality"};

inline std::string render_judge_prompt(std::string_view user_prompt, std::string_view reference,
                                       std::string_view answer) {
  return prompts::render(prompts::kJudge, {{"{{user_prompt}}", user_prompt},
                                           {"{{answer_ref}}", reference},
                                           {"{{answer_a}}", answer}});
}

namespace detail {

inline std::optional<std::string_view> between(std::string_view text, std::string_view open, std::string_view close) {
  const auto b = text.find(open);
  if (b == std::string_view::npos) return std::nullopt;
  const auto e = text.find(close, b + open.size());
  if (e == std::string_view::npos) return std::nullopt;
  return text.substr(b + open.size(), e - b - open.size());
}

}  // namespace detail

/// Parses the ratings block of a judge response. Ratings outside [1, 10] are
/// clamped, with one warning per clamp.
inline JudgeRatings parse_judge_ratings(std::string_view text, std::vector<std::string>* warnings = nullptr) {
  auto block = detail::between(text, "[The Start of Ratings]", "[The End of Ratings]");
  if (!block) throw ParseError("missing ratings block");
  std::array<std::optional<int>, 5> found;
  for (const auto& [key, value] : detail::key_number_pairs(*block)) {
    for (std::size_t i = 0; i < kJudgeCriteria.size(); ++i) {
      if (str::iequals(key, kJudgeCriteria[i]) && !found[i]) {
        int v = static_cast<int>(std::lround(value));
        if (v < 1 || v > 10) {
          if (warnings)
            warnings->push_back("judge rating " + std::to_string(v) + " for " + std::string(kJudgeCriteria[i]) +
                                " clamped to [1, 10]");
          v = std::clamp(v, 1, 10);
        }
        found[i] = v;
      }
    }
  }
  for (std::size_t i = 0; i < found.size(); ++i)
    if (!found[i]) throw ParseError("ratings block lacks " + std::string(kJudgeCriteria[i]));
  JudgeRatings r{*found[0], *found[1], *found[2], *found[3], *found[4], {}};
  if (auto expl = detail::between(text, "[The Start of Explanation]", "[The End of Explanation]"))
    r.explanation = std::string(str::trim(*expl));
  return r;
}

/// One judge call (plus one retry on an unparseable response).
inline JudgeRatings judge_evaluate(std::string_view user_prompt, std::string_view reference,
                                   std::string_view generated, const Generator& judge,
                                   std::vector<std::string>* warnings = nullptr) {
  const auto prompt = render_judge_prompt(user_prompt, reference, generated);
  std::string last;
  for (int attempt = 0; attempt < 2; ++attempt) {
    try {
      return parse_judge_ratings(judge.generate(prompt), warnings);
    } catch (const ParseError& e) {
      last = e.what();
    }
  }
  throw ParseError("judge response unparseable after retry: " + last);
}

}  // namespace longguide
