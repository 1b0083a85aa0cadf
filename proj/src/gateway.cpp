#include "pwb/gateway.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "pwb/dimensions.hpp"
#include "pwb/text.hpp"

namespace pwb {

using nlohmann::json;

namespace {

std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 33;
  x *= 0xff51afd7ed558ccdULL;
  x ^= x >> 33;
  x *= 0xc4ceb9fe1a85ec53ULL;
  x ^= x >> 33;
  return x;
}

std::string sanitize_for_path(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    const unsigned char uc = static_cast<unsigned char>(c);
    out.push_back(std::isalnum(uc) || c == '.' || c == '-' ? c : '_');
  }
  return out.empty() ? std::string("model") : out;
}

std::mutex g_cache_mutex;

json completion_to_json(const RawCompletion& c, double temperature) {
  json j;
  j["record_id"] = c.record_id;
  j["prompt_hash"] = c.prompt_hash;
  j["content"] = c.content;
  j["model_id"] = c.model_id;
  j["temperature"] = temperature;
  j["latency_ms"] = c.latency_ms;
  j["attempts"] = c.attempts;
  j["status"] = c.status == CompletionStatus::ok ? "ok" : "failed";
  return j;
}

}  // namespace

std::string_view completion_error_name(CompletionError e) {
  switch (e) {
    case CompletionError::none: return "none";
    case CompletionError::timeout: return "timeout";
    case CompletionError::transport: return "transport";
    case CompletionError::http_status: return "http_status";
    case CompletionError::malformed_response: return "malformed_response";
  }
  return "";
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t hash = 1469598103934665603ULL;
  for (char c : data) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 1099511628211ULL;
  }
  return hash;
}

std::string prompt_hash_hex(std::string_view prompt) {
  static constexpr char digits[] = "0123456789abcdef";
  std::uint64_t h = fnv1a64(prompt);
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

std::string mock_reply(std::string_view prompt, std::uint64_t seed, MockNoise noise) {
  const std::uint64_t h = fnv1a64(prompt);
  const auto tokens = text::tokenize(prompt);

  auto pick_token = [&](std::uint64_t salt) -> std::string {
    if (tokens.empty()) return "calm";
    return tokens[static_cast<std::size_t>(mix64(h ^ seed ^ salt) % tokens.size())];
  };

  json obj;
  for (Dimension d : all_dimensions()) {
    const auto idx = static_cast<std::uint64_t>(dimension_index(d));
    const int score = 3 + static_cast<int>(mix64(h ^ (seed * 0x9e3779b97f4a7c15ULL) ^ idx) % 19);
    json entry;
    entry["score"] = score;
    entry["keywords"] = json::array({pick_token(idx * 2 + 1), pick_token(idx * 2 + 2)});
    // a short contiguous token run as the supporting excerpt
    std::string excerpt;
    if (!tokens.empty()) {
      const std::size_t len = 4;
      const std::size_t start = static_cast<std::size_t>(
          mix64(h ^ seed ^ (idx + 101)) % std::max<std::size_t>(tokens.size(), 1));
      for (std::size_t i = start; i < std::min(start + len, tokens.size()); ++i) {
        if (!excerpt.empty()) excerpt.push_back(' ');
        excerpt += tokens[i];
      }
    }
    entry["evidence"] = excerpt.empty() ? json::array() : json::array({excerpt});
    obj[std::string(dimension_key(d))] = std::move(entry);
  }

  std::string body = obj.dump(2);
  switch (noise) {
    case MockNoise::none: return body;
    case MockNoise::fenced: return "```json\n" + body + "\n```";
    case MockNoise::think_block:
      return "<think>\nLet me work through the six dimensions first.\n</think>\n" + body;
  }
  return body;
}

std::filesystem::path cache_file_path(const std::filesystem::path& cache_dir,
                                      const std::string& model_id,
                                      const std::string& prompt_hash) {
  return cache_dir / sanitize_for_path(model_id) / (prompt_hash + ".json");
}

void write_cache_entry(const std::filesystem::path& cache_dir,
                       const RawCompletion& completion, double temperature) {
  const auto path = cache_file_path(cache_dir, completion.model_id, completion.prompt_hash);
  std::lock_guard<std::mutex> lock(g_cache_mutex);
  std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    out << completion_to_json(completion, temperature).dump(2) << "\n";
  }
  std::filesystem::rename(tmp, path);
}

std::optional<RawCompletion> read_cache_entry(const std::filesystem::path& cache_dir,
                                              const std::string& model_id,
                                              const std::string& prompt_hash,
                                              double temperature) {
  const auto path = cache_file_path(cache_dir, model_id, prompt_hash);
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  json j;
  try {
    in >> j;
  } catch (const json::parse_error&) {
    return std::nullopt;
  }
  if (!j.is_object() || j.value("model_id", "") != model_id) return std::nullopt;
  if (j.value("temperature", 0.0) != temperature) return std::nullopt;
  if (j.value("status", "") != "ok") return std::nullopt;

  RawCompletion c;
  c.record_id = j.value("record_id", "");
  c.prompt_hash = j.value("prompt_hash", prompt_hash);
  c.content = j.value("content", "");
  c.model_id = model_id;
  c.latency_ms = j.value("latency_ms", 0L);
  c.attempts = j.value("attempts", 1);
  c.status = CompletionStatus::ok;
  c.from_cache = true;
  return c;
}

LlmGateway::LlmGateway(BackendConfig config) : config_(std::move(config)) {
  if (config_.concurrency_limit < 1)
    throw std::invalid_argument("concurrency_limit must be >= 1");
  if (config_.timeout_sec <= 0.0) throw std::invalid_argument("timeout_sec must be > 0");
  if (config_.max_retries < 0) throw std::invalid_argument("max_retries must be >= 0");
}

RawCompletion LlmGateway::complete(const std::string& record_id, const std::string& prompt) {
  const std::string hash = prompt_hash_hex(prompt);
  if (!config_.cache_dir.empty()) {
    if (auto cached = read_cache_entry(config_.cache_dir, config_.model_id, hash,
                                       config_.temperature)) {
      cached->record_id = record_id;  // hash-keyed entry may predate this request
      return *cached;
    }
  }
  RawCompletion result = dispatch(record_id, prompt);
  if (result.status == CompletionStatus::ok && !config_.cache_dir.empty()) {
    write_cache_entry(config_.cache_dir, result, config_.temperature);
  }
  return result;
}

RawCompletion LlmGateway::dispatch(const std::string& record_id, const std::string& prompt) {
  ++backend_calls_;
  return config_.kind == BackendKind::mock ? complete_mock(record_id, prompt)
                                           : complete_http(record_id, prompt);
}

RawCompletion LlmGateway::complete_mock(const std::string& record_id,
                                        const std::string& prompt) {
  RawCompletion c;
  c.record_id = record_id;
  c.prompt_hash = prompt_hash_hex(prompt);
  c.model_id = config_.model_id;
  c.attempts = 1;
  if (config_.mock.latency_ms > 0)
    std::this_thread::sleep_for(std::chrono::milliseconds(config_.mock.latency_ms));
  if (!config_.mock.fail_marker.empty() &&
      prompt.find(config_.mock.fail_marker) != std::string::npos) {
    c.status = CompletionStatus::failed;
    c.error = CompletionError::timeout;
    c.error_detail = "mock timeout (fail marker present)";
    return c;
  }
  c.content = mock_reply(prompt, config_.mock.seed, config_.mock.noise);
  c.status = CompletionStatus::ok;
  return c;
}

RawCompletion LlmGateway::complete_http(const std::string& record_id,
                                        const std::string& prompt) {
  RawCompletion c;
  c.record_id = record_id;
  c.prompt_hash = prompt_hash_hex(prompt);
  c.model_id = config_.model_id;

  json body;
  body["model"] = config_.model_id;
  body["messages"] = json::array({json{{"role", "user"}, {"content", prompt}}});
  body["temperature"] = config_.temperature;
  body["max_tokens"] = config_.max_output_tokens;
  const std::string payload = body.dump();

  httplib::Headers headers;
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }

  httplib::Client client(config_.base_url);
  const auto timeout_ms =
      std::chrono::milliseconds(static_cast<long>(config_.timeout_sec * 1000.0));
  client.set_connection_timeout(timeout_ms);
  client.set_read_timeout(timeout_ms);
  client.set_write_timeout(timeout_ms);

  // deterministic full jitter, keyed on the prompt
  std::uint64_t jitter_state = fnv1a64(prompt) ^ 0x5bd1e995u;

  const auto start = std::chrono::steady_clock::now();
  for (int attempt = 1;; ++attempt) {
    c.attempts = attempt;
    auto res = client.Post("/v1/chat/completions", headers, payload, "application/json");

    bool retryable = false;
    if (!res) {
      const auto err = res.error();
      const bool is_timeout = err == httplib::Error::ConnectionTimeout ||
                              err == httplib::Error::Read || err == httplib::Error::Write;
      c.error = is_timeout ? CompletionError::timeout : CompletionError::transport;
      c.error_detail = httplib::to_string(err);
      retryable = true;
    } else if (res->status == 429 || res->status >= 500) {
      c.error = CompletionError::http_status;
      c.error_detail = "HTTP " + std::to_string(res->status);
      retryable = true;
    } else if (res->status != 200) {
      c.error = CompletionError::http_status;
      c.error_detail = "HTTP " + std::to_string(res->status);
      retryable = false;
    } else {
      try {
        const json reply = json::parse(res->body);
        c.content = reply.at("choices").at(0).at("message").at("content").get<std::string>();
        if (c.content.empty()) throw std::runtime_error("empty content");
        c.status = CompletionStatus::ok;
        c.error = CompletionError::none;
        c.error_detail.clear();
      } catch (const std::exception& e) {
        c.error = CompletionError::malformed_response;
        c.error_detail = e.what();
        retryable = false;
      }
    }

    if (c.status == CompletionStatus::ok || !retryable || attempt > config_.max_retries) {
      break;
    }
    const double cap = 60.0;
    const int doublings = std::min(attempt - 1, 40);
    const double window =
        std::min(cap, config_.backoff_base_sec * std::ldexp(1.0, doublings));
    const double unit = static_cast<double>(mix64(jitter_state += attempt) >> 11) * 0x1.0p-53;
    std::this_thread::sleep_for(std::chrono::duration<double>(window * unit));
  }

  c.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                     std::chrono::steady_clock::now() - start)
                     .count();
  return c;
}

std::vector<RawCompletion> LlmGateway::assess_batch(
    const std::vector<std::pair<std::string, std::string>>& prompts) {
  {
    std::vector<std::string> ids;
    ids.reserve(prompts.size());
    for (const auto& [id, _] : prompts) ids.push_back(id);
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
      throw std::invalid_argument("assess_batch requires unique record ids");
  }

  std::vector<RawCompletion> results(prompts.size());
  if (prompts.empty()) {
    last_batch_peak_ = 0;
    return results;
  }

  std::atomic<std::size_t> next{0};
  std::atomic<int> in_flight{0};
  std::atomic<int> peak{0};

  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= prompts.size()) return;
      const int now = in_flight.fetch_add(1) + 1;
      int prev = peak.load();
      while (now > prev && !peak.compare_exchange_weak(prev, now)) {
      }
      try {
        results[i] = complete(prompts[i].first, prompts[i].second);
      } catch (const std::exception& e) {
        RawCompletion failed;
        failed.record_id = prompts[i].first;
        failed.prompt_hash = prompt_hash_hex(prompts[i].second);
        failed.model_id = config_.model_id;
        failed.attempts = 1;
        failed.status = CompletionStatus::failed;
        failed.error = CompletionError::transport;
        failed.error_detail = e.what();
        results[i] = std::move(failed);
      }
      in_flight.fetch_sub(1);
    }
  };

  const std::size_t n_workers =
      std::min<std::size_t>(static_cast<std::size_t>(config_.concurrency_limit), prompts.size());
  std::vector<std::thread> threads;
  threads.reserve(n_workers);
  for (std::size_t t = 0; t < n_workers; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();

  last_batch_peak_ = peak.load();
  return results;
}

}  // namespace pwb
