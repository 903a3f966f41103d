#pragma once

// Access to the shipped fixture task and its scripted transcripts.

#include <filesystem>
#include <string>

#include "longguide/longguide.hpp"

namespace fixture {

inline std::filesystem::path path(const std::string& name) {
  return std::filesystem::path(LONGGUIDE_FIXTURE_DIR) / name;
}

inline longguide::Config config() { return longguide::load_config(path("config.json")); }

inline longguide::TaskDataset train() { return longguide::load_dataset(path("train.jsonl")); }

inline longguide::TaskDataset test() { return longguide::load_dataset(path("test.jsonl")); }

/// Self-evaluation score the learn script gives metric k on sample i, draw j.
inline int scripted_score(int i, int j, int k) {
  int v = 1 + (i * 2 + j * 3 + k * 4 + i * k) % 5;
  if (i == 3 && j == 1 && k == 1) v = 6;
  return v;
}

struct LearnRun {
  longguide::GuidelineBundle bundle;
  std::vector<longguide::MockBackend::Exchange> transcript;
  std::size_t calls = 0;
  std::size_t unused = 0;
};

/// Runs `learn` over the fixture against its scripted mock.
inline LearnRun learn(bool skip_step2 = false) {
  auto cfg = config();
  cfg.learn.skip_step2 = skip_step2;
  longguide::MockBackend mock(longguide::MockScript::load(path("learn_script.json")));
  longguide::Generator gen(mock, longguide::call_settings(cfg.backend));
  LearnRun run;
  run.bundle = longguide::learn(cfg, train(), gen);
  run.transcript = mock.transcript();
  run.calls = mock.call_count();
  run.unused = mock.remaining();
  return run;
}

// Positions of the first prompt of each kind in the fixture learn transcript.
inline constexpr std::size_t kSelectCall = 0;
inline constexpr std::size_t kDefineCall = 5;
inline constexpr std::size_t kScoreCall = 6;
inline constexpr std::size_t kGuidelineCall = 36;
inline constexpr std::size_t kValidationCall = 37;

}  // namespace fixture
