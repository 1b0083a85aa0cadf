#include "pwb/assessment.hpp"

#include <algorithm>
#include <cmath>
#include <regex>

#include "pwb/text.hpp"

namespace pwb {

using nlohmann::json;

std::vector<std::string> ValidationFlags::names() const {
  std::vector<std::string> out;
  if (out_of_range_clamped) out.push_back("out_of_range_clamped");
  if (repaired_json) out.push_back("repaired_json");
  if (missing_dimension_defaulted) out.push_back("missing_dimension_defaulted");
  return out;
}

ValidationError::ValidationError(Kind k, std::optional<Dimension> dim, std::string detail)
    : std::runtime_error(detail), kind(k), dimension(dim) {}

std::string ValidationError::error_class() const {
  switch (kind) {
    case Kind::missing_dimension:
      return "missing_dimension(" +
             (dimension ? std::string(dimension_display_name(*dimension)) : "?") + ")";
    case Kind::bad_score:
      return "bad_score(" +
             (dimension ? std::string(dimension_display_name(*dimension)) : "?") + ")";
    case Kind::wrong_shape: return "wrong_shape";
  }
  return "";
}

namespace {

std::string strip_think_spans(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  std::size_t pos = 0;
  while (pos < raw.size()) {
    const std::size_t open = raw.find("<think>", pos);
    if (open == std::string_view::npos) {
      out.append(raw.substr(pos));
      break;
    }
    out.append(raw.substr(pos, open - pos));
    const std::size_t close = raw.find("</think>", open);
    if (close == std::string_view::npos) {
      // unterminated reasoning span: keep the remainder, the object scan
      // will still find any JSON inside it
      out.append(raw.substr(open + 7));
      break;
    }
    pos = close + 8;
  }
  return out;
}

std::string strip_fence_lines(const std::string& in) {
  std::string out;
  out.reserve(in.size());
  std::size_t pos = 0;
  while (pos <= in.size()) {
    const std::size_t eol = in.find('\n', pos);
    const std::string_view line(in.data() + pos,
                                (eol == std::string::npos ? in.size() : eol) - pos);
    std::size_t first = line.find_first_not_of(" \t");
    const bool is_fence = first != std::string_view::npos && line.substr(first, 3) == "```";
    if (!is_fence) {
      out.append(line);
      out.push_back('\n');
    }
    if (eol == std::string::npos) break;
    pos = eol + 1;
  }
  if (!out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

// Balanced top-level {...} spans, string- and escape-aware inside a span.
std::vector<std::pair<std::size_t, std::size_t>> balanced_object_spans(const std::string& s) {
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  int depth = 0;
  bool in_string = false;
  bool escape = false;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (depth > 0) {
      if (escape) {
        escape = false;
        continue;
      }
      if (c == '\\') {
        if (in_string) escape = true;
        continue;
      }
      if (c == '"') {
        in_string = !in_string;
        continue;
      }
      if (in_string) continue;
    }
    if (c == '{') {
      if (depth == 0) {
        start = i;
        in_string = false;
        escape = false;
      }
      ++depth;
    } else if (c == '}' && depth > 0) {
      --depth;
      if (depth == 0) spans.emplace_back(start, i + 1);
    }
  }
  return spans;
}

struct RepairResult {
  std::string text;
  bool changed = false;
};

RepairResult apply_repairs(const std::string& candidate) {
  static const std::regex trailing_comma(R"(,(\s*[}\]]))");
  static const std::regex single_quoted_key(R"(([{,]\s*)'([^']*)'(\s*:))");
  static const std::regex unquoted_key(R"(([{,]\s*)([A-Za-z_][A-Za-z0-9_\- ]*?)(\s*:))");

  RepairResult r{candidate, false};
  std::string next = std::regex_replace(r.text, trailing_comma, "$1");
  if (next != r.text) {
    r.text = std::move(next);
    r.changed = true;
  }
  next = std::regex_replace(r.text, single_quoted_key, "$1\"$2\"$3");
  if (next != r.text) {
    r.text = std::move(next);
    r.changed = true;
  }
  next = std::regex_replace(r.text, unquoted_key, "$1\"$2\"$3");
  if (next != r.text) {
    r.text = std::move(next);
    r.changed = true;
  }
  return r;
}

std::optional<ExtractedJson> try_candidate(const std::string& candidate) {
  try {
    return ExtractedJson{json::parse(candidate), false};
  } catch (const json::parse_error&) {
  }
  const RepairResult repaired = apply_repairs(candidate);
  if (!repaired.changed) return std::nullopt;
  try {
    return ExtractedJson{json::parse(repaired.text), true};
  } catch (const json::parse_error&) {
  }
  return std::nullopt;
}

std::string context_snippet(const std::string& cleaned) {
  const std::size_t from = cleaned.size() > 200 ? cleaned.size() - 200 : 0;
  std::string snip = cleaned.substr(from);
  std::replace(snip.begin(), snip.end(), '\n', ' ');
  return snip;
}

}  // namespace

ExtractedJson extract_json(std::string_view raw) {
  const std::string cleaned = strip_fence_lines(strip_think_spans(raw));

  const auto spans = balanced_object_spans(cleaned);
  for (auto it = spans.rbegin(); it != spans.rend(); ++it) {
    if (auto out = try_candidate(cleaned.substr(it->first, it->second - it->first))) {
      if (!out->object.is_object()) continue;
      return *out;
    }
  }

  // Fallback for unbalanced stray braces in prose: retry from each '{',
  // latest first, taking the longest balanced span starting there.
  for (std::size_t i = cleaned.size(); i-- > 0;) {
    if (cleaned[i] != '{') continue;
    const auto sub_spans = balanced_object_spans(cleaned.substr(i));
    if (sub_spans.empty() || sub_spans.front().first != 0) continue;
    if (auto out = try_candidate(cleaned.substr(i, sub_spans.front().second))) {
      if (!out->object.is_object()) continue;
      return *out;
    }
  }

  throw ExtractError(context_snippet(cleaned));
}

namespace {

int clamp_score(double value, ValidationFlags& flags) {
  long rounded = std::lround(value);
  if (rounded < kScoreMin) {
    flags.out_of_range_clamped = true;
    return kScoreMin;
  }
  if (rounded > kScoreMax) {
    flags.out_of_range_clamped = true;
    return kScoreMax;
  }
  return static_cast<int>(rounded);
}

std::vector<std::string> string_list(const json& value, ValidationMode mode,
                                     Dimension dim, const char* field) {
  std::vector<std::string> out;
  if (value.is_null()) return out;
  if (value.is_string()) {
    if (mode == ValidationMode::strict)
      throw ValidationError(ValidationError::Kind::wrong_shape, dim,
                            std::string(field) + " must be an array of strings");
    out.push_back(value.get<std::string>());
    return out;
  }
  if (!value.is_array()) {
    if (mode == ValidationMode::strict)
      throw ValidationError(ValidationError::Kind::wrong_shape, dim,
                            std::string(field) + " must be an array of strings");
    return out;
  }
  for (const auto& item : value) {
    if (item.is_string()) {
      out.push_back(item.get<std::string>());
    } else if (mode == ValidationMode::strict) {
      throw ValidationError(ValidationError::Kind::wrong_shape, dim,
                            std::string(field) + " contains a non-string entry");
    } else if (item.is_number()) {
      out.push_back(item.dump());
    }
  }
  return out;
}

}  // namespace

AssessmentResult validate_assessment(const json& obj, const std::string& record_id,
                                     ValidationMode mode) {
  if (!obj.is_object())
    throw ValidationError(ValidationError::Kind::wrong_shape, std::nullopt,
                          "assessment must be a JSON object");

  std::array<const json*, kDimensionCount> found{};
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const auto dim = parse_dimension_key(it.key());
    if (!dim) continue;  // extra keys (summaries, totals) are ignored
    auto& slot = found[static_cast<std::size_t>(dimension_index(*dim))];
    if (slot == nullptr) slot = &it.value();
  }

  AssessmentResult result;
  result.record_id = record_id;

  for (Dimension d : all_dimensions()) {
    const std::size_t idx = static_cast<std::size_t>(dimension_index(d));
    DimensionAssessment& out = result.dimensions[idx];
    out.dimension = d;
    const json* value = found[idx];

    if (value == nullptr) {
      if (mode == ValidationMode::strict)
        throw ValidationError(ValidationError::Kind::missing_dimension, d,
                              "missing dimension: " + std::string(dimension_display_name(d)));
      out.score = kScoreMin;
      result.flags.missing_dimension_defaulted = true;
      continue;
    }

    const json* score_node = nullptr;
    if (value->is_object()) {
      if (auto it = value->find("score"); it != value->end()) score_node = &*it;
    } else if (value->is_number()) {
      if (mode == ValidationMode::strict)
        throw ValidationError(ValidationError::Kind::wrong_shape, d,
                              "dimension value must be an object with a score");
      score_node = value;
    } else if (mode == ValidationMode::strict) {
      throw ValidationError(ValidationError::Kind::wrong_shape, d,
                            "dimension value must be an object");
    }

    if (score_node == nullptr || !score_node->is_number()) {
      if (mode == ValidationMode::strict) {
        if (score_node == nullptr)
          throw ValidationError(ValidationError::Kind::missing_dimension, d,
                                "dimension has no score: " +
                                    std::string(dimension_display_name(d)));
        throw ValidationError(ValidationError::Kind::bad_score, d,
                              "score is not a number: " + score_node->dump());
      }
      out.score = kScoreMin;
      result.flags.missing_dimension_defaulted = true;
    } else {
      const double raw_score = score_node->get<double>();
      if (mode == ValidationMode::strict) {
        if (raw_score != std::floor(raw_score))
          throw ValidationError(ValidationError::Kind::bad_score, d,
                                "non-integer score " + score_node->dump() + " for " +
                                    std::string(dimension_display_name(d)));
        const long score = std::lround(raw_score);
        if (score < kScoreMin || score > kScoreMax)
          throw ValidationError(ValidationError::Kind::bad_score, d,
                                "score " + std::to_string(score) + " outside [" +
                                    std::to_string(kScoreMin) + ", " +
                                    std::to_string(kScoreMax) + "] for " +
                                    std::string(dimension_display_name(d)));
        out.score = static_cast<int>(score);
      } else {
        out.score = clamp_score(raw_score, result.flags);
      }
    }

    if (value->is_object()) {
      if (auto it = value->find("keywords"); it != value->end())
        out.keywords = string_list(*it, mode, d, "keywords");
      if (auto it = value->find("evidence"); it != value->end())
        out.evidence = string_list(*it, mode, d, "evidence");
    }
  }

  result.total = 0;
  for (const auto& dim : result.dimensions) result.total += dim.score;
  return result;
}

GroundedAssessment ground_keywords(const AssessmentResult& result,
                                   std::string_view transcript) {
  const auto transcript_tokens = text::tokenize(transcript);

  GroundedAssessment grounded;
  grounded.base = result;
  for (std::size_t i = 0; i < kDimensionCount; ++i) {
    for (const auto& kw : result.dimensions[i].keywords) {
      const auto kw_tokens = text::tokenize(kw);
      if (!kw_tokens.empty() && text::contains_token_run(transcript_tokens, kw_tokens)) {
        grounded.grounded_keywords[i].push_back(kw);
      } else {
        grounded.dropped_keywords[i].push_back(kw);
      }
    }
  }
  grounded.evidence_verified = verify_evidence(result, transcript);
  return grounded;
}

std::array<std::vector<bool>, kDimensionCount> verify_evidence(
    const AssessmentResult& result, std::string_view transcript, double min_overlap) {
  if (min_overlap < 0.0 || min_overlap > 1.0)
    throw std::invalid_argument("min_overlap must be in [0, 1]");
  const auto transcript_tokens = text::tokenize(transcript);

  std::array<std::vector<bool>, kDimensionCount> verified;
  for (std::size_t i = 0; i < kDimensionCount; ++i) {
    for (const auto& excerpt : result.dimensions[i].evidence) {
      const auto excerpt_tokens = text::tokenize(excerpt);
      bool ok = false;
      if (!excerpt_tokens.empty()) {
        if (text::contains_token_run(transcript_tokens, excerpt_tokens)) {
          ok = true;
        } else {
          const std::size_t run =
              text::longest_common_token_run(excerpt_tokens, transcript_tokens);
          ok = static_cast<double>(run) >=
               min_overlap * static_cast<double>(excerpt_tokens.size());
        }
      }
      verified[i].push_back(ok);
    }
  }
  return verified;
}

json grounded_to_json(const GroundedAssessment& g) {
  json dims = json::object();
  for (std::size_t i = 0; i < kDimensionCount; ++i) {
    const auto& d = g.base.dimensions[i];
    json entry;
    entry["score"] = d.score;
    entry["keywords"] = d.keywords;
    entry["evidence"] = d.evidence;
    entry["grounded_keywords"] = g.grounded_keywords[i];
    entry["dropped_keywords"] = g.dropped_keywords[i];
    entry["evidence_verified"] = g.evidence_verified[i];
    dims[std::string(dimension_key(d.dimension))] = std::move(entry);
  }
  json j;
  j["record_id"] = g.base.record_id;
  j["total"] = g.base.total;
  j["validation_flags"] = g.base.flags.names();
  j["dimensions"] = std::move(dims);
  return j;
}

GroundedAssessment grounded_from_json(const json& j) {
  GroundedAssessment g;
  g.base.record_id = j.at("record_id").get<std::string>();
  for (Dimension d : all_dimensions()) {
    const std::size_t i = static_cast<std::size_t>(dimension_index(d));
    const json& entry = j.at("dimensions").at(std::string(dimension_key(d)));
    auto& dim = g.base.dimensions[i];
    dim.dimension = d;
    dim.score = entry.at("score").get<int>();
    dim.keywords = entry.at("keywords").get<std::vector<std::string>>();
    dim.evidence = entry.at("evidence").get<std::vector<std::string>>();
    g.grounded_keywords[i] = entry.at("grounded_keywords").get<std::vector<std::string>>();
    g.dropped_keywords[i] = entry.at("dropped_keywords").get<std::vector<std::string>>();
    g.evidence_verified[i] = entry.at("evidence_verified").get<std::vector<bool>>();
  }
  g.base.total = 0;
  for (const auto& dim : g.base.dimensions) g.base.total += dim.score;
  for (const std::string& name : j.value("validation_flags", std::vector<std::string>{})) {
    if (name == "out_of_range_clamped") g.base.flags.out_of_range_clamped = true;
    if (name == "repaired_json") g.base.flags.repaired_json = true;
    if (name == "missing_dimension_defaulted") g.base.flags.missing_dimension_defaulted = true;
  }
  return g;
}

}  // namespace pwb
