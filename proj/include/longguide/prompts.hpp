#pragma once

// Prompt templates for guideline learning and judging. Placeholders are
// literal tokens such as {TASK_NAME}; render() substitutes them in one pass,
// so substituted text is never rescanned.

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace longguide::prompts {

inline constexpr int kVersion = 1;

inline constexpr std::string_view kSelectMetrics =
    "Select top-{TOP_K} metrics that are the most important from the list below to evaluate a "
    "special way of {TASK_NAME}.\n"
    "{METRIC_LIST}.\n"
    "Here are some demonstrations of the task {TASK_NAME}:\n"
    "{DEMONSTRATION_STRING}.\n"
    "Output your list of metrics in Python list format without any explanation: [...].";

inline constexpr std::string_view kScoreMetrics =
    "You are given an input and an output of a {TASK_NAME} task.\n"
    "Input: {INPUT}\n"
    "Output: {OUTPUT}\n"
    "Your task is to evaluate the following criteria on a scale of 1-5, with 1 being worst and 5 "
    "being best.\n"
    "{EVALUATION_FORMAT}\n"
    "The definitions of the criteria are:\n"
    "{METRICS_DEFINITIONS}\n"
    "Your output must be in Python dictionary format without explanation.";

inline constexpr std::string_view kDefineMetrics =
    "Define the list of following metrics in details as the quality of the output expected for "
    "the {TASK_NAME} task.\n"
    "{METRICS}\n"
    "Give me the list in bullet points.";

inline constexpr std::string_view kMetricGuideline =
    "Now you are given the following metrics: {METRICS} for the {TASK_NAME} task.\n"
    "Based on these scores on a scale of 5 for the quality of the output: {SCORES}, define the "
    "expected quality of the output for each metric in natural language. Give me the list in "
    "bullet points.";

inline constexpr std::string_view kJudge =
    "Please act as an impartial judge and evaluate how well an assistant's answer aligns with the "
    "reference answer and the quality of the assistant's answer. You will be given a user prompt, "
    "a reference answer and an assistant's answer.\n"
    "Your evaluation must consider the following criteria:\n"
    "\n"
    "- Format consistency: ensuring the generated response matches the length and structure of "
    "the reference.\n"
    "\n"
    "- Content completeness: evaluating whether all key points present in the reference are "
    "included in the assistant's answer.\n"
    "\n"
    "- Factuality: checking for factual correctness of the assistant's answer.\n"
    "\n"
    "- Style adherence: ensuring that the tone, style, and level of detail of the of the "
    "assistant's answer match the reference.\n"
    "\n"
    "- Assistant's answer quality: assessing how well the response satisfies the user's "
    "requirements.\n"
    "\n"
    "Begin your evaluation by providing a short explanation for each. Be as objective as "
    "possible. After providing your explanation, please rate the response on all the criterion on "
    "a scale of 1 to 10 by strictly following this format:\n"
    "\n"
    "[The Start of Explanation]\n"
    "\n"
    "...\n"
    "\n"
    "[The End of Explanation]\n"
    "\n"
    "[The Start of Ratings]\n"
    "\n"
    "{\n"
    "\n"
    "\"Format\": 1-10,\n"
    "\n"
    "\"Content\": 1-10,\n"
    "\n"
    "\"Factuality\": 1-10,\n"
    "\n"
    "\"Style\": 1-10,\n"
    "\n"
    "\"Quality\": 1-10,\n"
    "\n"
    "}\n"
    "\n"
    "[The End of Ratings]\n"
    "\n"
    "[User Prompt]\n"
    "\n"
    "{{user_prompt}}\n"
    "\n"
    "[The Start of Reference Answer]\n"
    "\n"
    "{{answer_ref}}\n"
    "\n"
    "[The End of Reference Answer]\n"
    "\n"
    "[The Start of Assistant's Answer]\n"
    "\n"
    "{{answer_a}}\n"
    "\n"
    "[The End of Assistant's Answer]";

using Bindings = std::vector<std::pair<std::string_view, std::string_view>>;

inline std::string render(std::string_view tmpl, const Bindings& bindings) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    bool matched = false;
    if (tmpl[i] == '{') {
      for (const auto& [key, value] : bindings) {
        if (tmpl.substr(i).starts_with(key)) {
          out += value;
          i += key.size();
          matched = true;
          break;
        }
      }
    }
    if (!matched) out += tmpl[i++];
  }
  return out;
}

}  // namespace longguide::prompts
