#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "oracles.hpp"
#include "pwb/assessment.hpp"
#include "pwb/gateway.hpp"
#include "pwb/prompting.hpp"

using namespace pwb;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Local OpenAI-compatible stub whose behaviour per request is scripted.
struct StubServer {
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::atomic<int> hits{0};

  explicit StubServer(std::function<void(int, const httplib::Request&, httplib::Response&)> handler) {
    server.Post("/v1/chat/completions",
                [this, handler](const httplib::Request& req, httplib::Response& res) {
                  handler(hits.fetch_add(1), req, res);
                });
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~StubServer() {
    server.stop();
    thread.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port); }
};

void reply_ok(httplib::Response& res, const std::string& content) {
  json body;
  body["choices"] = json::array({json{{"message", json{{"content", content}}}}});
  res.set_content(body.dump(), "application/json");
}

BackendConfig http_config(const std::string& url) {
  BackendConfig cfg;
  cfg.kind = BackendKind::http_openai_compatible;
  cfg.base_url = url;
  cfg.model_id = "stub-model";
  cfg.max_retries = 3;
  cfg.backoff_base_sec = 0.002;  // keep retry tests fast
  cfg.timeout_sec = 5.0;
  return cfg;
}

}  // namespace

TEST_CASE("mock_reply is deterministic and schema-valid") {
  const std::string prompt = "assess this transcript about my morning walk routine";
  CHECK(mock_reply(prompt, 7) == mock_reply(prompt, 7));
  CHECK(mock_reply(prompt, 7) != mock_reply(prompt, 8));

  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const json obj = json::parse(mock_reply(prompt, seed));
    for (Dimension d : all_dimensions()) {
      const int score = obj.at(std::string(dimension_key(d))).at("score").get<int>();
      CHECK(score >= 3);
      CHECK(score <= 21);
    }
  }
}

TEST_CASE("mock_reply noise modes") {
  const std::string prompt = "short prompt";
  CHECK(mock_reply(prompt, 1, MockNoise::fenced).rfind("```", 0) == 0);
  CHECK(mock_reply(prompt, 1, MockNoise::think_block).rfind("<think>", 0) == 0);
  // both stay recoverable
  CHECK(extract_json(mock_reply(prompt, 1, MockNoise::fenced)).object ==
        extract_json(mock_reply(prompt, 1)).object);
  CHECK(extract_json(mock_reply(prompt, 1, MockNoise::think_block)).object ==
        extract_json(mock_reply(prompt, 1)).object);
}

TEST_CASE("prompt_hash_hex is stable") {
  CHECK(prompt_hash_hex("abc") == prompt_hash_hex("abc"));
  CHECK(prompt_hash_hex("abc") != prompt_hash_hex("abd"));
  CHECK(prompt_hash_hex("abc").size() == 16);
}

TEST_CASE("mock complete twice yields identical content") {
  BackendConfig cfg;
  cfg.mock.seed = 5;
  LlmGateway gateway(cfg);
  const auto a = gateway.complete("r1", "prompt text");
  const auto b = gateway.complete("r1", "prompt text");
  CHECK(a.status == CompletionStatus::ok);
  CHECK(a.content == b.content);
  CHECK(a.attempts == 1);
}

TEST_CASE("assess_batch preserves input order and isolates failures") {
  BackendConfig cfg;
  cfg.concurrency_limit = 3;
  cfg.mock.fail_marker = "XFAILX";
  LlmGateway gateway(cfg);

  std::vector<std::pair<std::string, std::string>> prompts;
  for (int i = 0; i < 5; ++i)
    prompts.emplace_back("r" + std::to_string(i),
                         i == 2 ? "please XFAILX now" : "fine prompt " + std::to_string(i));
  const auto results = gateway.assess_batch(prompts);
  REQUIRE(results.size() == 5);
  for (int i = 0; i < 5; ++i) CHECK(results[static_cast<std::size_t>(i)].record_id == prompts[static_cast<std::size_t>(i)].first);
  CHECK(results[2].status == CompletionStatus::failed);
  CHECK(results[2].error == CompletionError::timeout);
  for (int i : {0, 1, 3, 4}) CHECK(results[static_cast<std::size_t>(i)].status == CompletionStatus::ok);
}

TEST_CASE("assess_batch on an empty list returns an empty list") {
  LlmGateway gateway(BackendConfig{});
  CHECK(gateway.assess_batch({}).empty());
}

TEST_CASE("assess_batch rejects duplicate record ids") {
  LlmGateway gateway(BackendConfig{});
  CHECK_THROWS_AS(gateway.assess_batch({{"a", "x"}, {"a", "y"}}), std::invalid_argument);
}

TEST_CASE("bounded concurrency over 1000 random batches") {
  oracle::TestRng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    BackendConfig cfg;
    cfg.concurrency_limit = 1 + static_cast<int>(rng.below(6));
    cfg.mock.latency_ms = trial % 50 == 0 ? 1 : 0;
    LlmGateway gateway(cfg);
    std::vector<std::pair<std::string, std::string>> prompts;
    for (long i = 0, n = rng.below(24); i < n; ++i)
      prompts.emplace_back("r" + std::to_string(i), "p" + std::to_string(rng.below(1000)));
    const auto results = gateway.assess_batch(prompts);
    CHECK(results.size() == prompts.size());
    CHECK(gateway.last_batch_peak_in_flight() <= cfg.concurrency_limit);
    for (std::size_t i = 0; i < prompts.size(); ++i)
      CHECK(results[i].record_id == prompts[i].first);
  }
}

TEST_CASE("http backend retries 429 then succeeds with attempts=3") {
  StubServer stub([](int hit, const httplib::Request&, httplib::Response& res) {
    if (hit < 2) {
      res.status = 429;
      res.set_content("slow down", "text/plain");
    } else {
      reply_ok(res, "{\"fine\": true}");
    }
  });
  LlmGateway gateway(http_config(stub.url()));
  const auto result = gateway.complete("r1", "hello");
  CHECK(result.status == CompletionStatus::ok);
  CHECK(result.attempts == 3);
  CHECK(result.content == "{\"fine\": true}");
}

TEST_CASE("http backend retries 500s and reports http_status after exhaustion") {
  StubServer stub([](int, const httplib::Request&, httplib::Response& res) {
    res.status = 503;
    res.set_content("down", "text/plain");
  });
  auto cfg = http_config(stub.url());
  cfg.max_retries = 2;
  LlmGateway gateway(cfg);
  const auto result = gateway.complete("r1", "hello");
  CHECK(result.status == CompletionStatus::failed);
  CHECK(result.error == CompletionError::http_status);
  CHECK(result.attempts == 3);  // max_retries + 1
}

TEST_CASE("unreachable host with max_retries=0 fails as transport, attempts=1") {
  auto cfg = http_config("http://127.0.0.1:1");  // nothing listens there
  cfg.max_retries = 0;
  cfg.timeout_sec = 2.0;
  LlmGateway gateway(cfg);
  const auto result = gateway.complete("r1", "hello");
  CHECK(result.status == CompletionStatus::failed);
  CHECK(result.error == CompletionError::transport);
  CHECK(result.attempts == 1);
}

TEST_CASE("non-retryable 4xx fails immediately") {
  StubServer stub([](int, const httplib::Request&, httplib::Response& res) {
    res.status = 400;
    res.set_content("bad request", "text/plain");
  });
  LlmGateway gateway(http_config(stub.url()));
  const auto result = gateway.complete("r1", "hello");
  CHECK(result.status == CompletionStatus::failed);
  CHECK(result.error == CompletionError::http_status);
  CHECK(result.attempts == 1);
}

TEST_CASE("response without choices is malformed_response") {
  StubServer stub([](int, const httplib::Request&, httplib::Response& res) {
    res.set_content("{\"unexpected\": []}", "application/json");
  });
  LlmGateway gateway(http_config(stub.url()));
  const auto result = gateway.complete("r1", "hello");
  CHECK(result.status == CompletionStatus::failed);
  CHECK(result.error == CompletionError::malformed_response);
}

TEST_CASE("bearer token from the environment reaches the server") {
  std::string seen_auth;
  StubServer stub([&](int, const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    reply_ok(res, "ok");
  });
  setenv("WB_API_KEY", "sk-test-123", 1);
  LlmGateway gateway(http_config(stub.url()));
  const auto result = gateway.complete("r1", "hello");
  unsetenv("WB_API_KEY");
  CHECK(result.status == CompletionStatus::ok);
  CHECK(seen_auth == "Bearer sk-test-123");
}

TEST_CASE("request body follows the chat-completions shape") {
  json seen_body;
  StubServer stub([&](int, const httplib::Request& req, httplib::Response& res) {
    seen_body = json::parse(req.body);
    reply_ok(res, "ok");
  });
  auto cfg = http_config(stub.url());
  cfg.temperature = 0.25;
  cfg.max_output_tokens = 512;
  LlmGateway gateway(cfg);
  gateway.complete("r1", "the prompt");
  CHECK(seen_body["model"] == "stub-model");
  CHECK(seen_body["temperature"] == 0.25);
  CHECK(seen_body["max_tokens"] == 512);
  REQUIRE(seen_body["messages"].size() == 1);
  CHECK(seen_body["messages"][0]["role"] == "user");
  CHECK(seen_body["messages"][0]["content"] == "the prompt");
}

TEST_CASE("completion cache: re-run issues zero backend calls") {
  const fs::path cache = fs::temp_directory_path() / "pwb_cache_test";
  fs::remove_all(cache);
  StubServer stub([](int, const httplib::Request&, httplib::Response& res) {
    reply_ok(res, "cached content");
  });
  auto cfg = http_config(stub.url());
  cfg.cache_dir = cache;
  {
    LlmGateway gateway(cfg);
    const auto first = gateway.complete("r1", "prompt A");
    CHECK(first.status == CompletionStatus::ok);
    CHECK(gateway.backend_calls() == 1);
    const auto second = gateway.complete("r1", "prompt A");
    CHECK(second.status == CompletionStatus::ok);
    CHECK(second.content == "cached content");
    CHECK(second.from_cache);
    CHECK(gateway.backend_calls() == 1);
  }
  // fresh gateway, same cache dir: still no backend call
  {
    LlmGateway gateway(cfg);
    const auto result = gateway.complete("r2", "prompt A");
    CHECK(result.status == CompletionStatus::ok);
    CHECK(result.record_id == "r2");
    CHECK(gateway.backend_calls() == 0);
  }
  CHECK(stub.hits.load() == 1);
  fs::remove_all(cache);
}

TEST_CASE("cache entries with a different temperature are misses") {
  const fs::path cache = fs::temp_directory_path() / "pwb_cache_temp";
  fs::remove_all(cache);
  BackendConfig cfg;
  cfg.cache_dir = cache;
  cfg.temperature = 0.0;
  {
    LlmGateway gateway(cfg);
    gateway.complete("r1", "prompt");
    CHECK(gateway.backend_calls() == 1);
  }
  cfg.temperature = 0.7;
  {
    LlmGateway gateway(cfg);
    gateway.complete("r1", "prompt");
    CHECK(gateway.backend_calls() == 1);  // miss, refetched
  }
  fs::remove_all(cache);
}

TEST_CASE("failed completions are not cached") {
  const fs::path cache = fs::temp_directory_path() / "pwb_cache_fail";
  fs::remove_all(cache);
  BackendConfig cfg;
  cfg.cache_dir = cache;
  cfg.mock.fail_marker = "BOOM";
  LlmGateway gateway(cfg);
  CHECK(gateway.complete("r1", "BOOM prompt").status == CompletionStatus::failed);
  CHECK(gateway.complete("r1", "BOOM prompt").status == CompletionStatus::failed);
  CHECK(gateway.backend_calls() == 2);  // no cache hit in between
  fs::remove_all(cache);
}
