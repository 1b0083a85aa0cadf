#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pwb/dimensions.hpp"

namespace pwb {

// Literal marker replaced by the transcript when the prompt is built.
inline constexpr std::string_view kTranscriptMarker = "{{TRANSCRIPT}}";

struct DimensionSpec {
  Dimension name = Dimension::autonomy;
  std::string low_descriptor;
  std::string moderate_descriptor;
  std::string high_descriptor;
};

// Clinician-role assessment prompt: role framing, lockdown context, the six
// dimension descriptors, scoring rule and JSON output schema, plus a
// transcript section holding the {{TRANSCRIPT}} marker.
struct PromptTemplate {
  std::string role_preamble;
  std::string context_statement;
  std::vector<DimensionSpec> dimension_specs;  // exactly 6, one per dimension
  std::string scoring_instruction;
  std::string output_schema_instruction;
  std::string transcript_section;  // contains the marker exactly once
};

struct PromptError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Built-in template covering all six dimensions, the 3-21 scale, the sum
// rule, keyword/evidence extraction and the JSON schema. Deterministic.
PromptTemplate default_template();

// Full prompt text with the transcript marker still in place.
std::string render_skeleton(const PromptTemplate& tpl);

// Empty result means the template is valid. Defects reported: missing or
// duplicate dimensions, empty descriptors, missing/duplicate transcript slot.
std::vector<std::string> validate_template(const PromptTemplate& tpl);

// Splices the transcript verbatim into the single marker slot. The transcript
// is inserted literally; braces or other template-looking content in it are
// preserved untouched. Throws PromptError on an empty transcript or a
// template whose marker count is not exactly one.
std::string build_prompt(const PromptTemplate& tpl, std::string_view transcript);

// Section-based template file format (see docs/default_template.txt).
PromptTemplate load_template_file(const std::filesystem::path& path);
std::string serialize_template(const PromptTemplate& tpl);

}  // namespace pwb
