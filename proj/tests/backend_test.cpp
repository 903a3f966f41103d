#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <mutex>
#include <thread>
#include <vector>

#include <httplib.h>

#include "longguide/backend.hpp"
#include "longguide/http_backend.hpp"

using namespace longguide;
using nlohmann::json;

namespace {

ChatRequest req(std::string user) { return {std::string(kDefaultSystemPrompt), std::move(user)}; }

}  // namespace

TEST(Fingerprint, StableAndSensitive) {
  const auto a = fingerprint(req("hello"));
  EXPECT_EQ(a.size(), 16u);
  EXPECT_EQ(a, fingerprint(req("hello")));
  EXPECT_NE(a, fingerprint(req("hello!")));
  EXPECT_NE(a, fingerprint({std::string("other"), "hello"}));
  EXPECT_EQ(fingerprint({std::nullopt, "x"}), fingerprint({std::string(), "x"}));
}

TEST(GenerationParams, Validation) {
  GenerationParams p;
  EXPECT_NO_THROW(p.validate());
  p.top_p = 0.0;
  EXPECT_THROW(p.validate(), ConfigError);
  p = {};
  p.max_new_tokens = 0;
  EXPECT_THROW(p.validate(), ConfigError);
  p = {};
  p.temperature = -0.1;
  EXPECT_THROW(p.validate(), ConfigError);
}

TEST(MockBackend, SequentialThenUnderrun) {
  MockBackend mock(MockScript::from_json(json::array({"one", "two"})));
  GenerationParams p;
  EXPECT_EQ(mock.complete(req("a"), p), "one");
  EXPECT_EQ(mock.complete(req("b"), p), "two");
  EXPECT_EQ(mock.remaining(), 0u);
  EXPECT_THROW(mock.complete(req("c"), p), ScriptUnderrunError);
  EXPECT_EQ(mock.transcript().size(), 2u);
  EXPECT_TRUE(mock.deterministic());
}

TEST(MockBackend, KeyedAndFallback) {
  json j = {{fingerprint(req("ping")), "pong"}, {"*", "default"}};
  MockBackend mock(MockScript::from_json(j));
  GenerationParams p;
  EXPECT_EQ(mock.complete(req("ping"), p), "pong");
  EXPECT_EQ(mock.complete(req("other"), p), "default");
  EXPECT_EQ(mock.complete(req("ping"), p), "pong");
  EXPECT_EQ(mock.call_count(), 3u);
}

TEST(MockBackend, RejectsBadScripts) {
  EXPECT_THROW(MockScript::from_json(json::array({1, 2})), ConfigError);
  EXPECT_THROW(MockScript::from_json(json("text")), ConfigError);
  EXPECT_THROW(MockScript::load("/nonexistent/script.json"), ConfigError);
}

TEST(MockBackend, EmptyPromptRejected) {
  MockBackend mock(MockScript::from_json(json::array({"x"})));
  EXPECT_THROW(mock.complete(req(""), {}), DataError);
}

TEST(SelfConsistency, IssuesNCallsInOrder) {
  MockBackend mock(MockScript::from_json(json::array({"r1", "r2", "r3"})));
  Generator gen(mock);
  const auto out = gen.sample("score this");
  EXPECT_EQ(out, (std::vector<std::string>{"r1", "r2", "r3"}));
  EXPECT_EQ(mock.call_count(), 3u);
  GenerationParams even;
  even.n_samples = 2;
  EXPECT_THROW(self_consistent_complete(mock, req("x"), even), ConfigError);
}

TEST(Generator, DefaultSettings) {
  CallSettings s;
  EXPECT_EQ(*s.system, "You are a helpful assistant!");
  EXPECT_EQ(s.greedy.temperature, 0.0);
  EXPECT_EQ(s.greedy.max_new_tokens, 1500);
  EXPECT_EQ(s.greedy.top_p, 1.0);
  EXPECT_EQ(s.sampling.n_samples, 3);
  EXPECT_GT(s.sampling.temperature, 0.0);
}

TEST(ParallelMap, PreservesOrderAndRethrowsLowest) {
  struct Wide : MockBackend {
    using MockBackend::MockBackend;
    std::size_t max_concurrency() const override { return 4; }
  } wide(MockScript{});
  auto squares = parallel_map(wide, 20, [](std::size_t i) { return i * i; });
  for (std::size_t i = 0; i < 20; ++i) EXPECT_EQ(squares[i], i * i);
  try {
    parallel_map(wide, 10, [](std::size_t i) -> int {
      if (i == 3 || i == 7) throw DataError("fail " + std::to_string(i));
      return 0;
    });
    FAIL();
  } catch (const DataError& e) {
    EXPECT_STREQ(e.what(), "fail 3");
  }
}

TEST(HttpWire, RequestBodyShape) {
  GenerationParams p{64, 0.9, 0.3, 1};
  const auto body = chat_request_body("m1", req("hi"), p);
  EXPECT_EQ(body["model"], "m1");
  EXPECT_EQ(body["messages"].size(), 2u);
  EXPECT_EQ(body["messages"][0]["role"], "system");
  EXPECT_EQ(body["messages"][1]["content"], "hi");
  EXPECT_EQ(body["temperature"], 0.3);
  EXPECT_EQ(body["top_p"], 0.9);
  EXPECT_EQ(body["max_tokens"], 64);
  EXPECT_EQ(chat_request_body("m", {std::nullopt, "hi"}, p)["messages"].size(), 1u);
}

TEST(HttpWire, ResponseParsing) {
  EXPECT_EQ(parse_chat_response(R"({"choices":[{"message":{"content":"ok"}}]})"), "ok");
  EXPECT_EQ(parse_chat_response(R"({"choices":[{"message":{"content":null}}]})"), "");
  EXPECT_THROW(parse_chat_response("{}"), ParseError);
  EXPECT_THROW(parse_chat_response("not json"), ParseError);
}

TEST(HttpWire, EndpointSplit) {
  auto e = split_endpoint("http://127.0.0.1:8080/v1/chat/completions");
  EXPECT_EQ(e.base, "http://127.0.0.1:8080");
  EXPECT_EQ(e.path, "/v1/chat/completions");
  EXPECT_EQ(split_endpoint("https://h").path, "/");
  EXPECT_THROW(split_endpoint("h/x"), ConfigError);
}

class LocalServer : public ::testing::Test {
 protected:
  // Handlers must be registered before start().
  void start() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  void TearDown() override {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }
  HttpBackendConfig config() const {
    HttpBackendConfig c;
    c.endpoint_url = "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
    c.model_name = "local";
    c.api_key = "secret";
    c.request_timeout_s = 5;
    c.max_retries = 2;
    c.backoff_ms = 1;
    return c;
  }
  static std::string reply(const std::string& text) {
    return json{{"choices", json::array({{{"message", {{"content", text}}}}})}}.dump();
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

TEST_F(LocalServer, RoundTrip) {
  std::string auth;
  json seen;
  server_.Post("/v1/chat/completions", [&](const httplib::Request& r, httplib::Response& res) {
    auth = r.get_header_value("Authorization");
    seen = json::parse(r.body);
    res.set_content(reply("echo: " + seen["messages"][1]["content"].get<std::string>()),
                    "application/json");
  });
  start();
  HttpBackend backend(config());
  EXPECT_EQ(backend.complete(req("hello"), {}), "echo: hello");
  EXPECT_EQ(auth, "Bearer secret");
  EXPECT_EQ(seen["model"], "local");
  EXPECT_EQ(seen["temperature"], 0.0);
  EXPECT_EQ(backend.call_count(), 1u);
}

TEST_F(LocalServer, RetriesTransientFailures) {
  std::atomic<int> hits{0};
  server_.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    const int n = ++hits;
    if (n == 1) {
      res.status = 429;
      res.set_content("slow down", "text/plain");
    } else if (n == 2) {
      res.status = 503;
    } else {
      res.set_content(reply("finally"), "application/json");
    }
  });
  start();
  HttpBackend backend(config());
  EXPECT_EQ(backend.complete(req("x"), {}), "finally");
  EXPECT_EQ(hits.load(), 3);
}

TEST_F(LocalServer, GivesUpAfterRetries) {
  std::atomic<int> hits{0};
  server_.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 500;
  });
  start();
  HttpBackend backend(config());
  EXPECT_THROW(backend.complete(req("x"), {}), TransportError);
  EXPECT_EQ(hits.load(), 3);
}

TEST_F(LocalServer, AuthErrorCarriesBodyVerbatim) {
  const std::string body = R"({"error":{"message":"invalid api key"}})";
  std::atomic<int> hits{0};
  server_.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 401;
    res.set_content(body, "application/json");
  });
  start();
  HttpBackend backend(config());
  try {
    backend.complete(req("x"), {});
    FAIL();
  } catch (const AuthError& e) {
    EXPECT_EQ(std::string(e.what()), body);
  }
  EXPECT_EQ(hits.load(), 1);
}

TEST_F(LocalServer, ClientErrorIsNotRetried) {
  std::atomic<int> hits{0};
  server_.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 400;
  });
  start();
  HttpBackend backend(config());
  EXPECT_THROW(backend.complete(req("x"), {}), TransportError);
  EXPECT_EQ(hits.load(), 1);
}

TEST_F(LocalServer, ConcurrencyIsBounded) {
  std::atomic<int> in_flight{0};
  std::atomic<int> peak{0};
  server_.new_task_queue = [] { return new httplib::ThreadPool(8); };
  server_.Post("/v1/chat/completions", [&](const httplib::Request& r, httplib::Response& res) {
    const int now = ++in_flight;
    int prev = peak.load();
    while (now > prev && !peak.compare_exchange_weak(prev, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(30));
    --in_flight;
    res.set_content(reply(json::parse(r.body)["messages"][1]["content"].get<std::string>()),
                    "application/json");
  });
  start();
  auto cfg = config();
  cfg.concurrency_limit = 2;
  HttpBackend backend(cfg);
  auto out = parallel_map(backend, 8, [&](std::size_t i) {
    return backend.complete(req("q" + std::to_string(i)), {});
  });
  for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(out[i], "q" + std::to_string(i));
  EXPECT_LE(peak.load(), 2);
  EXPECT_GE(peak.load(), 1);
}

TEST(HttpBackend, ConfigValidation) {
  HttpBackendConfig c;
  c.endpoint_url = "http://localhost/x";
  c.concurrency_limit = 0;
  EXPECT_THROW(HttpBackend{c}, ConfigError);
  c.concurrency_limit = 65;
  EXPECT_THROW(HttpBackend{c}, ConfigError);
}
