#pragma once

// Live backend speaking the common chat-completions JSON wire format.

#include <chrono>
#include <cstddef>
#include <semaphore>
#include <string>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "longguide/backend.hpp"
#include "longguide/error.hpp"

namespace longguide {

struct HttpBackendConfig {
  std::string endpoint_url;  // e.g. https://api.example.com/v1/chat/completions
  std::string model_name;
  std::string api_key;
  int request_timeout_s = 60;
  int max_retries = 3;
  int concurrency_limit = 4;
  int backoff_ms = 500;
};

struct Endpoint {
  std::string base;  // scheme://host[:port]
  std::string path;
};

inline Endpoint split_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint_url needs a scheme: " + url);
  const auto path_begin = url.find('/', scheme_end + 3);
  if (path_begin == std::string::npos) return {url, "/"};
  return {url.substr(0, path_begin), url.substr(path_begin)};
}

inline nlohmann::json chat_request_body(const std::string& model, const ChatRequest& request,
                                        const GenerationParams& params) {
  nlohmann::json messages = nlohmann::json::array();
  if (request.system && !request.system->empty())
    messages.push_back({{"role", "system"}, {"content", *request.system}});
  messages.push_back({{"role", "user"}, {"content", request.user}});
  return {{"model", model},
          {"messages", messages},
          {"temperature", params.temperature},
          {"top_p", params.top_p},
          {"max_tokens", params.max_new_tokens}};
}

/// Extracts choices[0].message.content from a response body.
inline std::string parse_chat_response(const std::string& body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
    const auto& content = j.at("choices").at(0).at("message").at("content");
    if (content.is_null()) return "";
    return content.get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed chat response: ") + e.what());
  }
}

class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpBackendConfig cfg)
      : cfg_(std::move(cfg)),
        endpoint_(split_endpoint(cfg_.endpoint_url)),
        slots_(cfg_.concurrency_limit > 0 ? cfg_.concurrency_limit : 1) {
    if (cfg_.max_retries < 0) throw ConfigError("max_retries must be non-negative");
    if (cfg_.concurrency_limit < 1 || cfg_.concurrency_limit > 64)
      throw ConfigError("concurrency_limit must lie in [1, 64]");
  }

  std::string complete(const ChatRequest& request, const GenerationParams& params) override {
    params.validate();
    if (request.user.empty()) throw DataError("empty prompt");
    const std::string body = chat_request_body(cfg_.model_name, request, params).dump();
    slots_.acquire();
    struct Release {
      std::counting_semaphore<64>& s;
      ~Release() { s.release(); }
    } release{slots_};
    ++calls_;

    std::string last_error;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
      if (attempt > 0)
        std::this_thread::sleep_for(std::chrono::milliseconds(cfg_.backoff_ms << (attempt - 1)));
      httplib::Client client(endpoint_.base);
      client.set_connection_timeout(cfg_.request_timeout_s, 0);
      client.set_read_timeout(cfg_.request_timeout_s, 0);
      client.set_write_timeout(cfg_.request_timeout_s, 0);
      httplib::Headers headers;
      if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);
      auto res = client.Post(endpoint_.path, headers, body, "application/json");
      if (!res) {
        last_error = "transport failure: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 401 || res->status == 403) throw AuthError(res->body);
      if (res->status == 429 || res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status) + ": " + res->body;
        continue;
      }
      if (res->status != 200)
        throw TransportError("HTTP " + std::to_string(res->status) + ": " + res->body);
      return parse_chat_response(res->body);
    }
    throw TransportError("request failed after " + std::to_string(cfg_.max_retries + 1) +
                         " attempts: " + last_error);
  }

  std::size_t max_concurrency() const override {
    return static_cast<std::size_t>(cfg_.concurrency_limit);
  }
  std::string model_name() const override { return cfg_.model_name; }
  std::size_t call_count() const override { return calls_.load(); }

 private:
  HttpBackendConfig cfg_;
  Endpoint endpoint_;
  std::counting_semaphore<64> slots_;
  std::atomic<std::size_t> calls_{0};
};

}  // namespace longguide
