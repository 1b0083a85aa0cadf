#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pwb/dimensions.hpp"

namespace pwb {

inline constexpr int kScoreMin = 3;
inline constexpr int kScoreMax = 21;
inline constexpr int kTotalMin = kScoreMin * kDimensionCount;  // 18
inline constexpr int kTotalMax = kScoreMax * kDimensionCount;  // 126

struct DimensionAssessment {
  Dimension dimension = Dimension::autonomy;
  int score = kScoreMin;
  std::vector<std::string> keywords;
  std::vector<std::string> evidence;  // transcript excerpts
};

struct ValidationFlags {
  bool out_of_range_clamped = false;
  bool repaired_json = false;
  bool missing_dimension_defaulted = false;

  bool any() const { return out_of_range_clamped || repaired_json || missing_dimension_defaulted; }
  std::vector<std::string> names() const;
};

struct AssessmentResult {
  std::string record_id;
  std::array<DimensionAssessment, kDimensionCount> dimensions;  // canonical order
  int total = 0;  // always recomputed as the sum of the six scores
  ValidationFlags flags;
};

struct GroundedAssessment {
  AssessmentResult base;
  std::array<std::vector<std::string>, kDimensionCount> grounded_keywords;
  std::array<std::vector<std::string>, kDimensionCount> dropped_keywords;
  std::array<std::vector<bool>, kDimensionCount> evidence_verified;
};

struct ExtractError : std::runtime_error {
  explicit ExtractError(std::string ctx)
      : std::runtime_error("no JSON object found in model output; context: " + ctx),
        context(std::move(ctx)) {}
  std::string context;  // up to 200 chars around the failure
};

struct ExtractedJson {
  nlohmann::json object;
  bool repaired = false;
};

// Pulls the last syntactically balanced JSON object out of raw model output
// after stripping <think>...</think> spans and unwrapping code fences.
// Bounded repairs (trailing commas, quoting of keys) are attempted when the
// candidate does not parse as-is; `repaired` reports whether any fired.
ExtractedJson extract_json(std::string_view raw);

enum class ValidationMode { strict, lenient };

struct ValidationError : std::runtime_error {
  enum class Kind { missing_dimension, bad_score, wrong_shape };
  ValidationError(Kind k, std::optional<Dimension> dim, std::string detail);
  Kind kind;
  std::optional<Dimension> dimension;
  std::string error_class() const;
};

// Maps dimension keys case/spacing-insensitively onto the six dimensions.
// strict: missing dimension, non-integer score or score outside [3,21] throws.
// lenient: out-of-range scores clamp (flagged), unusable/missing dimensions
// default to score 3 (flagged). The total is always recomputed, never read
// from the model output.
AssessmentResult validate_assessment(const nlohmann::json& obj,
                                     const std::string& record_id,
                                     ValidationMode mode);

// Keeps a keyword iff its normalized token sequence occurs contiguously in the
// normalized transcript; dropped keywords are recorded, never silently lost.
// Evidence excerpts are verified with the default overlap threshold.
GroundedAssessment ground_keywords(const AssessmentResult& result,
                                   std::string_view transcript);

inline constexpr double kDefaultEvidenceOverlap = 0.8;

// Excerpt verified iff its token sequence appears contiguously in the
// transcript, or its longest common contiguous run covers at least
// min_overlap of the excerpt length.
std::array<std::vector<bool>, kDimensionCount> verify_evidence(
    const AssessmentResult& result, std::string_view transcript,
    double min_overlap = kDefaultEvidenceOverlap);

// JSONL persistence for grounded assessments.
nlohmann::json grounded_to_json(const GroundedAssessment& g);
GroundedAssessment grounded_from_json(const nlohmann::json& j);

}  // namespace pwb
