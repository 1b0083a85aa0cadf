#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pwb/corpus.hpp"

namespace pwb {

enum class MalformClass { fenced, think_block, trailing_comma, prose_wrap, no_json };

std::string_view malform_class_name(MalformClass c);
std::optional<MalformClass> parse_malform_class(std::string_view name);

struct SynthConfig {
  int n_records = 111;
  int truth_lo = 51;  // within [18, 126]
  int truth_hi = 123;
  double noise_sigma = 8.0;
  std::uint64_t seed = 42;
  std::map<MalformClass, double> malformation_mix;  // remainder = clean outputs
  double alien_keyword_fraction = 0.0;  // keywords guaranteed absent from transcript
};

// Deterministic generator: identical output for identical seeds on every
// platform. splitmix64 core with local distribution code.
class SynthRng {
 public:
  explicit SynthRng(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next_u64();
  long uniform_int(long lo, long hi);  // inclusive bounds
  double uniform_real01();             // [0, 1)
  double normal(double mean, double sigma);

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// truth drawn uniformly from [truth_lo, truth_hi]; pred = round(truth +
// Normal(0, sigma)) clamped to [18, 126].
std::pair<std::vector<double>, std::vector<double>> generate_pairs(const SynthConfig& cfg);

struct SynthCorpus {
  std::vector<TranscriptRecord> records;
  std::vector<std::string> mock_outputs;  // aligned with records, possibly corrupted
  std::vector<std::optional<MalformClass>> applied_malformations;
};

// Transcripts of 9-310 words sampled from the vocabulary, paired with canned
// assessment outputs whose keywords come from the transcript (groundable by
// construction) except for the configured alien fraction.
SynthCorpus generate_corpus(const SynthConfig& cfg, const std::vector<std::string>& vocab);

// Applies exactly the named malformation, deterministically.
std::string corrupt_output(const std::string& clean_json, MalformClass cls,
                           std::uint64_t seed);

const std::vector<std::string>& default_vocab();

}  // namespace pwb
