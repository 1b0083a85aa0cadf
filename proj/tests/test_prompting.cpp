#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "pwb/prompting.hpp"

using namespace pwb;

TEST_CASE("default template has six dimensions and one slot") {
  const PromptTemplate tpl = default_template();
  CHECK(tpl.dimension_specs.size() == 6);
  CHECK(validate_template(tpl).empty());
  const std::string skeleton = render_skeleton(tpl);
  CHECK(skeleton.find(kTranscriptMarker) != std::string::npos);
  // schema instruction names the three per-dimension keys
  CHECK(tpl.output_schema_instruction.find("score") != std::string::npos);
  CHECK(tpl.output_schema_instruction.find("keywords") != std::string::npos);
  CHECK(tpl.output_schema_instruction.find("evidence") != std::string::npos);
}

TEST_CASE("default template is deterministic") {
  CHECK(render_skeleton(default_template()) == render_skeleton(default_template()));
}

TEST_CASE("build_prompt splices the transcript verbatim exactly once") {
  const PromptTemplate tpl = default_template();
  const std::string prompt = build_prompt(tpl, "I cook and read.");
  std::size_t count = 0;
  for (std::size_t pos = 0; (pos = prompt.find("I cook and read.", pos)) != std::string::npos;
       pos += 16)
    ++count;
  CHECK(count == 1);
  // all six display names appear
  for (Dimension d : all_dimensions())
    CHECK(prompt.find(std::string(dimension_display_name(d))) != std::string::npos);
}

TEST_CASE("build_prompt preserves braces in the transcript") {
  const std::string tricky = "I wrote {\"code\": {}} and $variables today.";
  const std::string prompt = build_prompt(default_template(), tricky);
  CHECK(prompt.find(tricky) != std::string::npos);
  CHECK(prompt.find(std::string(kTranscriptMarker)) == std::string::npos);
}

TEST_CASE("build_prompt is deterministic") {
  CHECK(build_prompt(default_template(), "same text") ==
        build_prompt(default_template(), "same text"));
}

TEST_CASE("build_prompt rejects empty transcripts and slotless templates") {
  CHECK_THROWS_AS(build_prompt(default_template(), ""), PromptError);
  PromptTemplate no_slot = default_template();
  no_slot.transcript_section = "Transcript: (pasted above)";
  CHECK_THROWS_AS(build_prompt(no_slot, "text"), PromptError);
}

TEST_CASE("validate_template reports missing and duplicate dimensions") {
  PromptTemplate tpl = default_template();
  tpl.dimension_specs.pop_back();  // drop self_acceptance
  auto defects = validate_template(tpl);
  REQUIRE(defects.size() == 1);
  CHECK(defects[0] == "missing: Self-Acceptance");

  PromptTemplate dup = default_template();
  dup.dimension_specs[5] = dup.dimension_specs[0];
  defects = validate_template(dup);
  REQUIRE(defects.size() == 2);
  CHECK(defects[0] == "duplicate: Autonomy");
  CHECK(defects[1] == "missing: Self-Acceptance");
}

TEST_CASE("validate_template reports slot problems") {
  PromptTemplate tpl = default_template();
  tpl.transcript_section = "no marker here";
  auto defects = validate_template(tpl);
  REQUIRE(defects.size() == 1);
  CHECK(defects[0] == "missing transcript slot");

  tpl = default_template();
  tpl.context_statement += " {{TRANSCRIPT}}";  // second slot smuggled into prose
  defects = validate_template(tpl);
  REQUIRE(defects.size() == 1);
  CHECK(defects[0] == "duplicate transcript slot");
}

TEST_CASE("validate_template reports empty descriptors") {
  PromptTemplate tpl = default_template();
  tpl.dimension_specs[2].high_descriptor.clear();
  const auto defects = validate_template(tpl);
  REQUIRE(defects.size() == 1);
  CHECK(defects[0].find("Personal Growth") != std::string::npos);
}

TEST_CASE("template file round trip") {
  const PromptTemplate tpl = default_template();
  const auto path = std::filesystem::temp_directory_path() / "tpl_roundtrip.txt";
  {
    std::ofstream out(path, std::ios::binary);
    out << serialize_template(tpl);
  }
  const PromptTemplate loaded = load_template_file(path);
  CHECK(validate_template(loaded).empty());
  CHECK(render_skeleton(loaded) == render_skeleton(tpl));
}

TEST_CASE("shipped docs/default_template.txt matches the built-in template") {
  const auto path = std::filesystem::path(PWB_SOURCE_DIR) / "docs" / "default_template.txt";
  REQUIRE(std::filesystem::exists(path));
  const PromptTemplate loaded = load_template_file(path);
  CHECK(validate_template(loaded).empty());
  CHECK(render_skeleton(loaded) == render_skeleton(default_template()));
}

TEST_CASE("template file loader rejects unknown sections and dimensions") {
  const auto path = std::filesystem::temp_directory_path() / "tpl_bad.txt";
  {
    std::ofstream out(path, std::ios::binary);
    out << "[preamble]\nhello\n";
  }
  CHECK_THROWS_AS(load_template_file(path), PromptError);
  {
    std::ofstream out(path, std::ios::binary);
    out << "[dimension bravery]\nlow: x\nmoderate: y\nhigh: z\n";
  }
  CHECK_THROWS_AS(load_template_file(path), PromptError);
}
