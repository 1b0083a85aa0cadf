#pragma once

#include <array>
#include <cctype>
#include <optional>
#include <string>
#include <string_view>

namespace pwb {

// The six Ryff psychological well-being dimensions. The set is closed; code
// iterates over all_dimensions() and indexes arrays by dimension_index().
enum class Dimension {
  autonomy,
  environmental_mastery,
  personal_growth,
  positive_relations,
  purpose_in_life,
  self_acceptance,
};

inline constexpr int kDimensionCount = 6;

inline constexpr std::array<Dimension, kDimensionCount> all_dimensions() {
  return {Dimension::autonomy,          Dimension::environmental_mastery,
          Dimension::personal_growth,   Dimension::positive_relations,
          Dimension::purpose_in_life,   Dimension::self_acceptance};
}

inline constexpr int dimension_index(Dimension d) { return static_cast<int>(d); }

inline std::string_view dimension_display_name(Dimension d) {
  switch (d) {
    case Dimension::autonomy: return "Autonomy";
    case Dimension::environmental_mastery: return "Environmental Mastery";
    case Dimension::personal_growth: return "Personal Growth";
    case Dimension::positive_relations: return "Positive Relations with Others";
    case Dimension::purpose_in_life: return "Purpose in Life";
    case Dimension::self_acceptance: return "Self-Acceptance";
  }
  return "";
}

// Canonical JSON key for the dimension, as requested from the model.
inline std::string_view dimension_key(Dimension d) {
  switch (d) {
    case Dimension::autonomy: return "autonomy";
    case Dimension::environmental_mastery: return "environmental_mastery";
    case Dimension::personal_growth: return "personal_growth";
    case Dimension::positive_relations: return "positive_relations_with_others";
    case Dimension::purpose_in_life: return "purpose_in_life";
    case Dimension::self_acceptance: return "self_acceptance";
  }
  return "";
}

// Case/spacing/punctuation-insensitive key matching. Models vary between
// "Positive Relations", "positive_relations_with_others", "Self-acceptance"
// and so on; all collapse to the same alphanumeric form.
inline std::string fold_key(std::string_view key) {
  std::string folded;
  folded.reserve(key.size());
  for (char c : key) {
    unsigned char uc = static_cast<unsigned char>(c);
    if (std::isalnum(uc)) folded.push_back(static_cast<char>(std::tolower(uc)));
  }
  return folded;
}

inline std::optional<Dimension> parse_dimension_key(std::string_view key) {
  const std::string k = fold_key(key);
  if (k == "autonomy") return Dimension::autonomy;
  if (k == "environmentalmastery" || k == "environmentmastery")
    return Dimension::environmental_mastery;
  if (k == "personalgrowth") return Dimension::personal_growth;
  if (k == "positiverelations" || k == "positiverelationswithothers" ||
      k == "positiverelationships" || k == "positiverelationshipswithothers" ||
      k == "relationswithothers")
    return Dimension::positive_relations;
  if (k == "purposeinlife" || k == "lifepurpose") return Dimension::purpose_in_life;
  if (k == "selfacceptance") return Dimension::self_acceptance;
  return std::nullopt;
}

}  // namespace pwb
