#include "pwb/synth.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "pwb/assessment.hpp"
#include "pwb/text.hpp"

namespace pwb {

using nlohmann::json;

std::string_view malform_class_name(MalformClass c) {
  switch (c) {
    case MalformClass::fenced: return "fenced";
    case MalformClass::think_block: return "think_block";
    case MalformClass::trailing_comma: return "trailing_comma";
    case MalformClass::prose_wrap: return "prose_wrap";
    case MalformClass::no_json: return "no_json";
  }
  return "";
}

std::optional<MalformClass> parse_malform_class(std::string_view name) {
  if (name == "fenced") return MalformClass::fenced;
  if (name == "think_block") return MalformClass::think_block;
  if (name == "trailing_comma") return MalformClass::trailing_comma;
  if (name == "prose_wrap") return MalformClass::prose_wrap;
  if (name == "no_json") return MalformClass::no_json;
  return std::nullopt;
}

std::uint64_t SynthRng::next_u64() {
  state_ += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

long SynthRng::uniform_int(long lo, long hi) {
  if (lo > hi) throw std::invalid_argument("uniform_int: lo > hi");
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  // rejection sampling keeps the draw unbiased
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return lo + static_cast<long>(x % span);
}

double SynthRng::uniform_real01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SynthRng::normal(double mean, double sigma) {
  if (has_spare_) {
    has_spare_ = false;
    return mean + sigma * spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform_real01() - 1.0;
    v = 2.0 * uniform_real01() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double scale = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * scale;
  has_spare_ = true;
  return mean + sigma * u * scale;
}

namespace {

void check_config(const SynthConfig& cfg) {
  if (cfg.n_records < 1) throw std::invalid_argument("n_records must be >= 1");
  if (cfg.truth_lo > cfg.truth_hi) throw std::invalid_argument("truth range: lo > hi");
  if (cfg.truth_lo < kRyffTotalMin || cfg.truth_hi > kRyffTotalMax)
    throw std::invalid_argument("truth range must lie within [18, 126]");
  if (cfg.noise_sigma < 0.0) throw std::invalid_argument("noise_sigma must be >= 0");
  double mix_total = 0.0;
  for (const auto& [cls, p] : cfg.malformation_mix) {
    if (p < 0.0) throw std::invalid_argument("malformation probability must be >= 0");
    mix_total += p;
  }
  if (mix_total > 1.0 + 1e-9)
    throw std::invalid_argument("malformation probabilities must sum to <= 1");
}

int draw_pred(SynthRng& rng, int truth, double sigma) {
  const double noisy = static_cast<double>(truth) + rng.normal(0.0, sigma);
  const long rounded = std::lround(noisy);
  return static_cast<int>(std::clamp(rounded, static_cast<long>(kRyffTotalMin),
                                     static_cast<long>(kRyffTotalMax)));
}

// Split a total in [18, 126] into six scores in [3, 21].
std::array<int, kDimensionCount> split_total(int total) {
  std::array<int, kDimensionCount> scores;
  const int base = total / kDimensionCount;
  int remainder = total % kDimensionCount;
  for (auto& s : scores) {
    s = base + (remainder > 0 ? 1 : 0);
    if (remainder > 0) --remainder;
  }
  return scores;
}

std::optional<MalformClass> draw_malformation(SynthRng& rng, const SynthConfig& cfg) {
  const double u = rng.uniform_real01();
  double cumulative = 0.0;
  for (const auto& [cls, p] : cfg.malformation_mix) {
    cumulative += p;
    if (u < cumulative) return cls;
  }
  return std::nullopt;
}

}  // namespace

std::pair<std::vector<double>, std::vector<double>> generate_pairs(const SynthConfig& cfg) {
  check_config(cfg);
  SynthRng rng(cfg.seed);
  std::vector<double> truth, pred;
  truth.reserve(static_cast<std::size_t>(cfg.n_records));
  pred.reserve(static_cast<std::size_t>(cfg.n_records));
  for (int i = 0; i < cfg.n_records; ++i) {
    const int t = static_cast<int>(rng.uniform_int(cfg.truth_lo, cfg.truth_hi));
    truth.push_back(static_cast<double>(t));
    pred.push_back(static_cast<double>(draw_pred(rng, t, cfg.noise_sigma)));
  }
  return {std::move(truth), std::move(pred)};
}

SynthCorpus generate_corpus(const SynthConfig& cfg, const std::vector<std::string>& vocab) {
  check_config(cfg);
  if (vocab.empty()) throw std::invalid_argument("generate_corpus requires a vocabulary");

  SynthRng rng(cfg.seed);
  SynthCorpus out;
  out.records.reserve(static_cast<std::size_t>(cfg.n_records));

  for (int i = 0; i < cfg.n_records; ++i) {
    TranscriptRecord rec;
    {
      std::ostringstream id;
      id << "p" << (i < 100 ? (i < 10 ? "00" : "0") : "") << i;
      rec.id = id.str();
    }

    const long n_words = rng.uniform_int(9, 310);
    std::vector<std::string> words;
    words.reserve(static_cast<std::size_t>(n_words));
    for (long w = 0; w < n_words; ++w) {
      std::string word = vocab[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<long>(vocab.size()) - 1))];
      if (w > 0 && w % 12 == 0) words.back().push_back('.');
      words.push_back(std::move(word));
    }
    rec.text = text::join(words);

    const int truth = static_cast<int>(rng.uniform_int(cfg.truth_lo, cfg.truth_hi));
    rec.ground_truth_ryff = truth;
    const double words_per_sec = 0.5 + 2.5 * rng.uniform_real01();
    rec.duration_sec = std::round(10.0 * static_cast<double>(n_words) / words_per_sec) / 10.0;
    rec.age = static_cast<int>(rng.uniform_int(21, 86));
    rec.sex = rng.uniform_real01() < 0.63 ? Sex::female : Sex::male;

    const int pred_total = draw_pred(rng, truth, cfg.noise_sigma);
    const auto scores = split_total(pred_total);

    auto sample_run = [&](std::size_t len) {
      const std::size_t n = words.size();
      const std::size_t take = std::min(len, n);
      const std::size_t start =
          static_cast<std::size_t>(rng.uniform_int(0, static_cast<long>(n - take)));
      std::vector<std::string> run(words.begin() + static_cast<std::ptrdiff_t>(start),
                                   words.begin() + static_cast<std::ptrdiff_t>(start + take));
      return text::join(run);
    };

    json obj;
    for (Dimension d : all_dimensions()) {
      const std::size_t idx = static_cast<std::size_t>(dimension_index(d));
      json entry;
      entry["score"] = scores[idx];
      json keywords = json::array();
      for (int k = 0; k < 2; ++k) {
        if (rng.uniform_real01() < cfg.alien_keyword_fraction) {
          keywords.push_back("qqxalien" + std::to_string(rng.uniform_int(0, 9999)));
        } else {
          const auto& w = words[static_cast<std::size_t>(
              rng.uniform_int(0, static_cast<long>(words.size()) - 1))];
          keywords.push_back(text::normalize_token(w));
        }
      }
      entry["keywords"] = std::move(keywords);
      entry["evidence"] = json::array({sample_run(4)});
      obj[std::string(dimension_key(d))] = std::move(entry);
    }

    std::string output = obj.dump(2);
    const auto malformation = draw_malformation(rng, cfg);
    if (malformation) output = corrupt_output(output, *malformation, cfg.seed + std::uint64_t(i));

    out.records.push_back(std::move(rec));
    out.mock_outputs.push_back(std::move(output));
    out.applied_malformations.push_back(malformation);
  }
  return out;
}

std::string corrupt_output(const std::string& clean_json, MalformClass cls,
                           std::uint64_t seed) {
  {
    // precondition: input must parse
    auto parsed = json::parse(clean_json, nullptr, false);
    if (parsed.is_discarded())
      throw std::invalid_argument("corrupt_output requires parseable JSON input");
  }
  SynthRng rng(seed);
  switch (cls) {
    case MalformClass::fenced:
      return "```json\n" + clean_json + "\n```";
    case MalformClass::think_block: {
      // decoy draft object inside the reasoning span stresses the strip logic
      const long decoy = rng.uniform_int(0, 99);
      return "<think>\nFirst pass, roughly {\"draft\": " + std::to_string(decoy) +
             "} but let me re-read the transcript.\n</think>\n" + clean_json;
    }
    case MalformClass::trailing_comma: {
      const std::size_t pos = clean_json.rfind('}');
      std::string out = clean_json;
      out.insert(pos, ",");
      return out;
    }
    case MalformClass::prose_wrap: {
      static const char* openers[] = {
          "Sure - here is the structured assessment you asked for.",
          "Based on the transcript, my assessment follows.",
          "After reading the monologue carefully, I scored it as below."};
      const auto& opener = openers[rng.uniform_int(0, 2)];
      return std::string(opener) + "\n\n" + clean_json +
             "\n\nLet me know if you would like a narrative summary as well.";
    }
    case MalformClass::no_json: {
      std::string out;
      out.reserve(clean_json.size());
      for (char c : clean_json) {
        if (c != '{' && c != '}') out.push_back(c);
      }
      return out;
    }
  }
  throw std::invalid_argument("unknown malformation class");
}

const std::vector<std::string>& default_vocab() {
  static const std::vector<std::string> vocab = {
      "morning",  "coffee",   "breakfast", "garden",    "walk",      "dog",
      "family",   "daughter", "son",       "phone",     "call",      "zoom",
      "work",     "email",    "cooking",   "dinner",    "reading",   "book",
      "news",     "television", "exercise", "routine",  "manage",    "control",
      "learning", "positive", "social",    "friends",   "neighbours", "shopping",
      "online",   "worry",    "anxious",   "calm",      "grateful",  "quiet",
      "lonely",   "connected", "support",  "health",    "sleep",     "tired",
      "energy",   "project",  "hobby",     "painting",  "music",     "baking",
      "bread",    "cleaning", "house",     "plants",    "spring",    "weather",
      "sunshine", "rain",     "children",  "grandchildren", "partner", "husband",
      "wife",     "video",    "chat",      "school",    "homework",  "helping",
      "community", "volunteer", "masks",   "distance",  "rules",     "allowed",
      "outside",  "inside",   "home",      "office",    "desk",      "meeting",
      "colleagues", "furlough", "job",     "income",    "stress",    "coping",
      "hopeful",  "future",   "plans",     "holiday",   "cancelled", "birthday",
      "celebrate", "alone",   "together",  "evening",   "weekend",   "monday",
      "sunday",   "afternoon", "lunch",    "tea",       "biscuits",  "crossword",
      "puzzle",   "knitting", "sewing",    "repair",    "bicycle",   "park",
      "river",    "hill",     "fresh",     "air",       "thankful",  "blessed",
      "difficult", "struggle", "better",   "worse",     "normal",    "strange",
      "different", "adapting", "adjusting", "managing", "enjoying",  "missing"};
  return vocab;
}

}  // namespace pwb
