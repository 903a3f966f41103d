#pragma once

// Deterministic word tokenization, sentence splitting and length statistics.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "longguide/error.hpp"
#include "longguide/strings.hpp"

namespace longguide {

using TokenList = std::vector<std::string>;
using SentenceList = std::vector<std::string>;

struct SentenceOptions {
  /// Words that end in a terminal but never close a sentence. Matched case-insensitively.
  std::vector<std::string> abbreviations{"Mr.", "Mrs.", "Dr.", "e.g.", "i.e.", "etc."};
  /// Terminals that close a sentence only when followed by whitespace or end of text.
  std::vector<std::string> terminals{".", "!", "?"};
  /// Terminals that close a sentence unconditionally (scripts written without spaces).
  std::vector<std::string> hard_terminals{"。", "！", "？"};
};

struct LengthStats {
  std::int64_t min_s = 0;
  std::int64_t max_s = 0;
  std::int64_t avg_s = 0;
  std::int64_t min_t = 0;
  std::int64_t max_t = 0;
  std::int64_t avg_t = 0;

  friend bool operator==(const LengthStats&, const LengthStats&) = default;
};

/// Whitespace split, then strip leading/trailing ASCII punctuation from each piece.
inline TokenList tokenize(std::string_view text) {
  TokenList tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && str::is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !str::is_space(text[j])) ++j;
    std::string_view word = text.substr(i, j - i);
    while (!word.empty() && str::is_punct(word.front())) word.remove_prefix(1);
    while (!word.empty() && str::is_punct(word.back())) word.remove_suffix(1);
    if (!word.empty()) tokens.emplace_back(word);
    i = j;
  }
  return tokens;
}

namespace detail {

inline bool has_token(std::string_view s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!str::is_space(s[i]) && !str::is_punct(s[i])) return true;
  }
  return false;
}

inline bool is_closer(char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }

struct TerminalMatch {
  std::size_t length = 0;
  bool hard = false;
};

inline TerminalMatch match_terminal(std::string_view text, std::size_t pos,
                                    const SentenceOptions& opts) {
  std::string_view rest = text.substr(pos);
  for (const auto& t : opts.hard_terminals) {
    if (!t.empty() && rest.starts_with(t)) return {t.size(), true};
  }
  for (const auto& t : opts.terminals) {
    if (!t.empty() && rest.starts_with(t)) return {t.size(), false};
  }
  return {};
}

inline bool is_abbreviation(std::string_view text, std::size_t word_end,
                            const SentenceOptions& opts) {
  std::size_t b = word_end;
  while (b > 0 && !str::is_space(text[b - 1])) --b;
  std::string_view word = text.substr(b, word_end - b);
  while (!word.empty() && (word.front() == '(' || word.front() == '"' || word.front() == '\''))
    word.remove_prefix(1);
  return std::any_of(opts.abbreviations.begin(), opts.abbreviations.end(),
                     [&](const std::string& a) { return str::iequals(word, a); });
}

}  // namespace detail

/// Rule-based splitter. A fragment without any word characters never forms a
/// sentence on its own; it is folded into its neighbour.
inline SentenceList split_sentences(std::string_view text, const SentenceOptions& opts = {}) {
  SentenceList sentences;
  std::size_t last_begin = 0;
  std::size_t start = 0;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    auto m = detail::match_terminal(text, i, opts);
    if (m.length == 0) {
      ++i;
      continue;
    }
    std::size_t end = i + m.length;
    bool hard = m.hard;
    while (end < n) {
      auto next = detail::match_terminal(text, end, opts);
      if (next.length) {
        end += next.length;
        hard = hard || next.hard;
      } else if (detail::is_closer(text[end])) {
        ++end;
      } else {
        break;
      }
    }
    bool boundary = hard || end == n || str::is_space(text[end]);
    if (boundary && !hard && detail::is_abbreviation(text, end, opts)) boundary = false;
    if (boundary) {
      std::string_view candidate = str::trim(text.substr(start, end - start));
      if (detail::has_token(candidate)) {
        last_begin = start;
        sentences.emplace_back(candidate);
        start = end;
      }
    }
    i = end;
  }
  std::string_view rest = str::trim(text.substr(start));
  if (detail::has_token(rest)) {
    sentences.emplace_back(rest);
  } else if (!rest.empty() && !sentences.empty()) {
    sentences.back() = std::string(str::trim(text.substr(last_begin)));
  }
  return sentences;
}

/// Min/max/mean of sentence and word counts; means are rounded half-up.
inline LengthStats length_stats(const std::vector<std::string>& references,
                                const SentenceOptions& opts = {}) {
  if (references.empty()) throw DataError("empty dataset");
  LengthStats st;
  std::int64_t sum_s = 0;
  std::int64_t sum_t = 0;
  bool first = true;
  for (const auto& ref : references) {
    auto s = static_cast<std::int64_t>(split_sentences(ref, opts).size());
    auto t = static_cast<std::int64_t>(tokenize(ref).size());
    if (first) {
      st.min_s = st.max_s = s;
      st.min_t = st.max_t = t;
      first = false;
    }
    st.min_s = std::min(st.min_s, s);
    st.max_s = std::max(st.max_s, s);
    st.min_t = std::min(st.min_t, t);
    st.max_t = std::max(st.max_t, t);
    sum_s += s;
    sum_t += t;
  }
  const auto count = static_cast<std::int64_t>(references.size());
  // floor(sum / count + 1/2) in exact integer arithmetic
  st.avg_s = (2 * sum_s + count) / (2 * count);
  st.avg_t = (2 * sum_t + count) / (2 * count);
  return st;
}

}  // namespace longguide
