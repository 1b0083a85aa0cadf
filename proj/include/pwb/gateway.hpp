#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pwb {

enum class BackendKind { http_openai_compatible, mock };

enum class MockNoise { none, fenced, think_block };

// Knobs for the deterministic mock backend. fail_marker simulates per-record
// failures: any prompt containing the marker reports a timeout.
struct MockOptions {
  std::uint64_t seed = 0;
  MockNoise noise = MockNoise::none;
  int latency_ms = 0;
  std::string fail_marker;
};

struct BackendConfig {
  BackendKind kind = BackendKind::mock;
  std::string base_url;  // http kind only, e.g. http://127.0.0.1:8080
  std::string model_id = "mock-model";
  double temperature = 0.0;
  int max_output_tokens = 2048;
  double timeout_sec = 30.0;
  int max_retries = 2;
  int concurrency_limit = 4;
  double backoff_base_sec = 1.0;  // exponential, doubling, full jitter, 60 s cap
  std::string api_key_env = "WB_API_KEY";
  std::filesystem::path cache_dir;  // empty disables the completion cache
  MockOptions mock;
};

enum class CompletionStatus { ok, failed };
enum class CompletionError { none, timeout, transport, http_status, malformed_response };

std::string_view completion_error_name(CompletionError e);

struct RawCompletion {
  std::string record_id;
  std::string prompt_hash;
  std::string content;
  std::string model_id;
  long latency_ms = 0;
  int attempts = 0;
  CompletionStatus status = CompletionStatus::failed;
  CompletionError error = CompletionError::none;
  std::string error_detail;
  bool from_cache = false;
};

std::uint64_t fnv1a64(std::string_view data);
std::string prompt_hash_hex(std::string_view prompt);

// Deterministic well-formed assessment JSON; the six scores are a pure
// function of (prompt hash, seed). Noise wrapping exercises the parser.
std::string mock_reply(std::string_view prompt, std::uint64_t seed,
                       MockNoise noise = MockNoise::none);

// Completion cache: one JSON file per completion, named by hex prompt hash,
// under a per-model subdirectory. Entries are keyed by
// (model_id, prompt_hash, temperature); a temperature mismatch is a miss.
std::filesystem::path cache_file_path(const std::filesystem::path& cache_dir,
                                      const std::string& model_id,
                                      const std::string& prompt_hash);
void write_cache_entry(const std::filesystem::path& cache_dir,
                       const RawCompletion& completion, double temperature);
std::optional<RawCompletion> read_cache_entry(const std::filesystem::path& cache_dir,
                                              const std::string& model_id,
                                              const std::string& prompt_hash,
                                              double temperature);

class LlmGateway {
 public:
  explicit LlmGateway(BackendConfig config);

  // Single completion with retries (exponential backoff with full jitter on
  // transport errors and HTTP 429/5xx). Failures are reported in the result,
  // never thrown.
  RawCompletion complete(const std::string& record_id, const std::string& prompt);

  // One result per input, in input order, regardless of completion order.
  // At most concurrency_limit requests are in flight; per-item failures do
  // not abort the batch. Throws on duplicate record ids.
  std::vector<RawCompletion> assess_batch(
      const std::vector<std::pair<std::string, std::string>>& prompts);

  const BackendConfig& config() const { return config_; }
  // Backend invocations (mock or HTTP attempts chains), excluding cache hits.
  long backend_calls() const { return backend_calls_; }
  int last_batch_peak_in_flight() const { return last_batch_peak_; }

 private:
  RawCompletion dispatch(const std::string& record_id, const std::string& prompt);
  RawCompletion complete_mock(const std::string& record_id, const std::string& prompt);
  RawCompletion complete_http(const std::string& record_id, const std::string& prompt);

  BackendConfig config_;
  std::atomic<long> backend_calls_{0};
  int last_batch_peak_ = 0;
};

}  // namespace pwb
