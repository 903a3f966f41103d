#pragma once

// Chat-completion backends: the abstract interface, a deterministic scripted
// mock, and self-consistency sampling on top of either.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "longguide/error.hpp"

namespace longguide {

inline constexpr const char* kDefaultSystemPrompt = "You are a helpful assistant!";

struct GenerationParams {
  int max_new_tokens = 1500;
  double top_p = 1.0;
  double temperature = 0.0;
  int n_samples = 1;

  void validate() const {
    if (max_new_tokens <= 0) throw ConfigError("max_new_tokens must be positive");
    if (!(top_p > 0.0 && top_p <= 1.0)) throw ConfigError("top_p must lie in (0, 1]");
    if (temperature < 0.0) throw ConfigError("temperature must be non-negative");
    if (n_samples < 1) throw ConfigError("n_samples must be at least 1");
  }
};

struct ChatRequest {
  std::optional<std::string> system;
  std::string user;
};

/// Stable 64-bit FNV-1a digest of a request, rendered as 16 hex digits.
/// The system prompt is part of the digest; an absent and an empty system
/// prompt hash identically.
inline std::string fingerprint(const ChatRequest& req) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  feed(req.system.value_or(""));
  feed("\x1f");
  feed(req.user);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

class Backend {
 public:
  virtual ~Backend() = default;

  /// One response for one request. Implementations must be safe to call from
  /// up to max_concurrency() threads at once.
  virtual std::string complete(const ChatRequest& request, const GenerationParams& params) = 0;

  virtual std::size_t max_concurrency() const { return 1; }
  virtual std::string model_name() const = 0;
  virtual std::size_t call_count() const = 0;
  virtual bool deterministic() const { return false; }
};

/// n independent completions issued sequentially, order preserved.
inline std::vector<std::string> self_consistent_complete(Backend& backend, const ChatRequest& request,
                                                         const GenerationParams& params) {
  params.validate();
  if (params.n_samples % 2 == 0) throw ConfigError("self-consistency needs an odd sample count");
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(params.n_samples));
  for (int i = 0; i < params.n_samples; ++i) out.push_back(backend.complete(request, params));
  return out;
}

/// Request defaults shared by every call a pipeline stage makes.
struct CallSettings {
  std::optional<std::string> system = std::string(kDefaultSystemPrompt);
  /// Single-sample generation (validation, inference, guideline synthesis).
  GenerationParams greedy{1500, 1.0, 0.0, 1};
  /// Self-consistency sampling for scoring.
  GenerationParams sampling{1500, 1.0, 0.7, 3};
};

/// A backend paired with the settings used to talk to it.
class Generator {
 public:
  explicit Generator(Backend& backend, CallSettings settings = {})
      : backend_(&backend), settings_(std::move(settings)) {}

  std::string generate(std::string prompt) const {
    return backend_->complete(request(std::move(prompt)), settings_.greedy);
  }

  std::vector<std::string> sample(std::string prompt) const {
    return self_consistent_complete(*backend_, request(std::move(prompt)), settings_.sampling);
  }

  ChatRequest request(std::string prompt) const { return {settings_.system, std::move(prompt)}; }

  Backend& backend() const { return *backend_; }
  const CallSettings& settings() const { return settings_; }

 private:
  Backend* backend_;
  CallSettings settings_;
};

struct MockScript {
  std::vector<std::string> sequence;
  std::map<std::string, std::string> keyed;
  std::optional<std::string> fallback;

  /// Accepts a JSON array of strings, or an object mapping request fingerprints
  /// to strings. In the object form the key "*" answers any unmatched request.
  static MockScript from_json(const nlohmann::json& j) {
    MockScript s;
    if (j.is_array()) {
      for (const auto& item : j) {
        if (!item.is_string()) throw ConfigError("mock script entries must be strings");
        s.sequence.push_back(item.get<std::string>());
      }
    } else if (j.is_object()) {
      for (const auto& [key, value] : j.items()) {
        if (!value.is_string()) throw ConfigError("mock script entries must be strings");
        if (key == "*")
          s.fallback = value.get<std::string>();
        else
          s.keyed.emplace(key, value.get<std::string>());
      }
    } else {
      throw ConfigError("mock script must be a JSON array or object");
    }
    return s;
  }

  static MockScript load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open mock script " + path.string());
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("mock script " + path.string() + ": " + e.what());
    }
    return from_json(j);
  }
};

/// Replays canned responses. Keyed entries win over the sequence; the
/// fallback answers once both are exhausted. Strictly sequential.
class MockBackend : public Backend {
 public:
  struct Exchange {
    std::string fingerprint;
    std::string prompt;
    std::string response;
  };

  explicit MockBackend(MockScript script, std::string model = "mock")
      : script_(std::move(script)), model_(std::move(model)) {}

  std::string complete(const ChatRequest& request, const GenerationParams& params) override {
    params.validate();
    if (request.user.empty()) throw DataError("empty prompt");
    std::lock_guard lock(mu_);
    ++calls_;
    const std::string fp = fingerprint(request);
    std::string response;
    if (auto it = script_.keyed.find(fp); it != script_.keyed.end()) {
      response = it->second;
    } else if (cursor_ < script_.sequence.size()) {
      response = script_.sequence[cursor_++];
    } else if (script_.fallback) {
      response = *script_.fallback;
    } else {
      throw ScriptUnderrunError("mock script exhausted after " + std::to_string(cursor_) +
                                " responses");
    }
    transcript_.push_back({fp, request.user, response});
    return response;
  }

  std::string model_name() const override { return model_; }
  std::size_t call_count() const override {
    std::lock_guard lock(mu_);
    return calls_;
  }
  bool deterministic() const override { return true; }

  std::vector<Exchange> transcript() const {
    std::lock_guard lock(mu_);
    return transcript_;
  }
  std::size_t remaining() const {
    std::lock_guard lock(mu_);
    return script_.sequence.size() - cursor_;
  }

 private:
  MockScript script_;
  std::string model_;
  mutable std::mutex mu_;
  std::size_t cursor_ = 0;
  std::size_t calls_ = 0;
  std::vector<Exchange> transcript_;
};

/// Runs fn(i) for i in [0, count) and returns results in index order. Runs
/// inline when the backend is sequential; otherwise uses up to
/// max_concurrency() worker threads. The exception from the lowest failing
/// index is rethrown.
template <typename Fn>
auto parallel_map(const Backend& backend, std::size_t count, Fn&& fn)
    -> std::vector<decltype(fn(std::size_t{}))> {
  using Result = decltype(fn(std::size_t{}));
  std::vector<Result> results;
  const std::size_t workers = std::min(backend.max_concurrency(), count);
  if (workers <= 1) {
    results.reserve(count);
    for (std::size_t i = 0; i < count; ++i) results.push_back(fn(i));
    return results;
  }
  std::vector<std::optional<Result>> slots(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            slots[i].emplace(fn(i));
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  results.reserve(count);
  for (auto& s : slots) results.push_back(std::move(*s));
  return results;
}

}  // namespace longguide
