#pragma once

// Run configuration (one JSON document with sections) and backend construction.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "longguide/backend.hpp"
#include "longguide/catalog.hpp"
#include "longguide/dataset.hpp"
#include "longguide/error.hpp"
#include "longguide/http_backend.hpp"
#include "longguide/selector.hpp"
#include "longguide/textstat.hpp"

namespace longguide {

struct BackendSettings {
  std::string kind = "mock";  // "mock" or "http"
  std::filesystem::path mock_script;
  std::string endpoint_url;
  std::string model_name = "mock";
  std::string api_key_env = "LONGGUIDE_API_KEY";
  int request_timeout_s = 60;
  int max_retries = 3;
  int concurrency_limit = 4;
  int backoff_ms = 500;
  std::optional<std::string> system_prompt = std::string(kDefaultSystemPrompt);
  double temperature = 0.0;
  double sc_temperature = 0.7;
  double top_p = 1.0;
  int max_new_tokens = 1500;
  int self_consistency = 3;
};

struct LearnSettings {
  SelectionConfig selection;
  std::size_t train_cap = kMaxTrainSamples;
  bool skip_step2 = false;
  std::string variants = "all";  // "all" or "ocg-only"
  ValidationMetric validation_metric = ValidationMetric::RougeLRecall;
};

struct ProbeSettings {
  std::filesystem::path demo_pool;
  std::filesystem::path eval_set;
  int target_score = 5;
  int target_tokens = 17;
  int target_sentences = 2;
  bool judge_self_consistency = true;
};

struct Config {
  std::filesystem::path base_dir;
  TaskSpec task;
  std::filesystem::path train_path;
  std::filesystem::path test_path;
  std::filesystem::path demos_path;
  BackendSettings backend;
  std::optional<BackendSettings> judge;
  LearnSettings learn;
  ProbeSettings probe;
  SentenceOptions text;
  std::vector<std::string> extra_metrics;
  std::uint64_t seed = 0;

  std::filesystem::path resolve(const std::filesystem::path& p) const {
    if (p.empty() || p.is_absolute()) return p;
    return base_dir / p;
  }

  MetricCatalog catalog() const {
    MetricCatalog c;
    for (const auto& name : extra_metrics) c.add({name});
    return c;
  }
};

namespace detail {

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) out = it->get<T>();
}

inline BackendSettings parse_backend(const nlohmann::json& j, BackendSettings b) {
  read_opt(j, "kind", b.kind);
  if (b.kind != "mock" && b.kind != "http") throw ConfigError("backend kind must be mock or http");
  std::string script;
  read_opt(j, "mock_script", script);
  if (!script.empty()) b.mock_script = script;
  read_opt(j, "endpoint_url", b.endpoint_url);
  read_opt(j, "model_name", b.model_name);
  read_opt(j, "api_key_env", b.api_key_env);
  read_opt(j, "request_timeout_s", b.request_timeout_s);
  read_opt(j, "max_retries", b.max_retries);
  read_opt(j, "concurrency_limit", b.concurrency_limit);
  read_opt(j, "backoff_ms", b.backoff_ms);
  if (auto it = j.find("system_prompt"); it != j.end())
    b.system_prompt = it->is_null() ? std::nullopt : std::optional<std::string>(it->get<std::string>());
  read_opt(j, "temperature", b.temperature);
  read_opt(j, "sc_temperature", b.sc_temperature);
  read_opt(j, "top_p", b.top_p);
  read_opt(j, "max_new_tokens", b.max_new_tokens);
  read_opt(j, "self_consistency", b.self_consistency);
  return b;
}

}  // namespace detail

inline Config parse_config(const nlohmann::json& j, std::filesystem::path base_dir) {
  Config c;
  c.base_dir = std::move(base_dir);
  try {
    const auto& task = j.at("task");
    c.task.name = task.at("name").get<std::string>();
    c.task.instruction = task.at("instruction").get<std::string>();
    detail::read_opt(task, "context", c.task.context);
    detail::read_opt(task, "response_noun", c.task.response_noun);
    std::string p;
    detail::read_opt(task, "train", p);
    c.train_path = p;
    p.clear();
    detail::read_opt(task, "test", p);
    c.test_path = p;
    p.clear();
    detail::read_opt(task, "demos", p);
    c.demos_path = p;

    if (auto it = j.find("backend"); it != j.end()) c.backend = detail::parse_backend(*it, {});
    if (auto it = j.find("judge"); it != j.end() && !it->is_null()) {
      BackendSettings judge_defaults;
      judge_defaults.api_key_env = "LONGGUIDE_JUDGE_API_KEY";
      c.judge = detail::parse_backend(*it, judge_defaults);
    }
    if (auto it = j.find("learn"); it != j.end()) {
      auto& s = c.learn.selection;
      detail::read_opt(*it, "iterations", s.iterations);
      detail::read_opt(*it, "batch_size", s.batch_size);
      detail::read_opt(*it, "top_k", s.top_k);
      detail::read_opt(*it, "train_cap", c.learn.train_cap);
      detail::read_opt(*it, "skip_step2", c.learn.skip_step2);
      detail::read_opt(*it, "variants", c.learn.variants);
      std::string metric;
      detail::read_opt(*it, "validation_metric", metric);
      if (!metric.empty()) c.learn.validation_metric = parse_validation_metric(metric);
    }
    if (auto it = j.find("probe"); it != j.end()) {
      std::string path;
      detail::read_opt(*it, "demo_pool", path);
      c.probe.demo_pool = path;
      path.clear();
      detail::read_opt(*it, "eval_set", path);
      c.probe.eval_set = path;
      detail::read_opt(*it, "target_score", c.probe.target_score);
      detail::read_opt(*it, "target_tokens", c.probe.target_tokens);
      detail::read_opt(*it, "target_sentences", c.probe.target_sentences);
      detail::read_opt(*it, "judge_self_consistency", c.probe.judge_self_consistency);
    }
    if (auto it = j.find("text"); it != j.end()) {
      detail::read_opt(*it, "abbreviations", c.text.abbreviations);
      detail::read_opt(*it, "terminals", c.text.terminals);
      detail::read_opt(*it, "hard_terminals", c.text.hard_terminals);
    }
    if (auto it = j.find("catalog"); it != j.end()) detail::read_opt(*it, "extra_metrics", c.extra_metrics);
    detail::read_opt(j, "seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.learn.selection.seed = c.seed;
  if (c.learn.variants != "all" && c.learn.variants != "ocg-only")
    throw ConfigError("learn.variants must be all or ocg-only");
  if (c.learn.train_cap == 0) throw ConfigError("learn.train_cap must be positive");
  c.learn.selection.validate();
  return c;
}

inline Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return parse_config(j, std::filesystem::absolute(path).parent_path());
}

inline CallSettings call_settings(const BackendSettings& b) {
  CallSettings s;
  s.system = b.system_prompt;
  s.greedy = {b.max_new_tokens, b.top_p, b.temperature, 1};
  s.sampling = {b.max_new_tokens, b.top_p, b.sc_temperature, b.self_consistency};
  s.greedy.validate();
  s.sampling.validate();
  if (b.self_consistency % 2 == 0) throw ConfigError("self_consistency must be odd");
  return s;
}

/// Builds the backend a settings block describes. HTTP credentials come from
/// the environment variable named by api_key_env; the judge falls back to
/// LONGGUIDE_API_KEY when its own variable is unset.
inline std::unique_ptr<Backend> make_backend(const BackendSettings& b, const Config& cfg) {
  if (b.kind == "mock") {
    if (b.mock_script.empty()) throw ConfigError("mock backend needs mock_script");
    return std::make_unique<MockBackend>(MockScript::load(cfg.resolve(b.mock_script)), b.model_name);
  }
  HttpBackendConfig h;
  h.endpoint_url = b.endpoint_url;
  h.model_name = b.model_name;
  if (const char* key = std::getenv(b.api_key_env.c_str())) {
    h.api_key = key;
  } else if (const char* fallback = std::getenv("LONGGUIDE_API_KEY")) {
    h.api_key = fallback;
  }
  h.request_timeout_s = b.request_timeout_s;
  h.max_retries = b.max_retries;
  h.concurrency_limit = b.concurrency_limit;
  h.backoff_ms = b.backoff_ms;
  return std::make_unique<HttpBackend>(std::move(h));
}

}  // namespace longguide
