#include "pwb/prompting.hpp"

#include <array>
#include <fstream>
#include <sstream>

namespace pwb {

namespace {

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  std::size_t count = 0;
  std::size_t pos = 0;
  while ((pos = haystack.find(needle, pos)) != std::string_view::npos) {
    ++count;
    pos += needle.size();
  }
  return count;
}

std::string trim(std::string_view s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

PromptTemplate default_template() {
  PromptTemplate tpl;
  tpl.role_preamble =
      "You are an expert clinical psychologist working with a linguist to assess "
      "psychological well-being from spontaneous speech. You evaluate what the "
      "speaker actually says, without diagnosing or speculating beyond the text.";
  tpl.context_statement =
      "The transcript below is a short monologue by a participant describing "
      "their typical day during the COVID-19 lockdown. Assess the speaker on the "
      "six dimensions of psychological well-being defined next.";

  auto spec = [](Dimension d, std::string low, std::string mod, std::string high) {
    return DimensionSpec{d, std::move(low), std::move(mod), std::move(high)};
  };
  tpl.dimension_specs = {
      spec(Dimension::autonomy,
           "relies heavily on the opinions of others and yields to social pressure",
           "balances others' expectations with some self-direction",
           "self-determining and independent; regulates behaviour from within"),
      spec(Dimension::environmental_mastery,
           "feels overwhelmed by daily demands and unable to improve the situation",
           "copes with everyday affairs, with occasional difficulty",
           "manages responsibilities well and shapes surroundings to personal needs"),
      spec(Dimension::personal_growth,
           "feels stagnant or bored, with little interest in new experiences",
           "shows some openness to new experiences and gradual development",
           "sees self as growing and open to new experiences; realising own potential"),
      spec(Dimension::positive_relations,
           "has few close relationships; feels isolated or frustrated with others",
           "maintains some warm relationships, with occasional strain",
           "has warm, trusting relationships and shows concern for others' welfare"),
      spec(Dimension::purpose_in_life,
           "lacks a sense of direction or meaning in daily activities",
           "has some goals, though direction may waver",
           "has clear goals and a sense of directedness; finds daily life meaningful"),
      spec(Dimension::self_acceptance,
           "is dissatisfied with self and troubled by personal qualities or the past",
           "generally accepts self despite awareness of shortcomings",
           "holds a positive attitude toward self and accepts both good and bad qualities"),
  };

  tpl.scoring_instruction =
      "For each dimension assign an integer score from 3 (very low) to 21 (very "
      "high), using the low/moderate/high descriptions as anchors. The overall "
      "well-being score is defined as the sum of the six dimension scores; do not "
      "report it yourself. For every dimension also extract indicative keywords "
      "(single words or short phrases that occur in the transcript) and evidence "
      "(verbatim transcript excerpts that support the score).";

  tpl.output_schema_instruction =
      "Respond with a single JSON object and nothing else: no prose before or "
      "after it. The object must have exactly these six keys: \"autonomy\", "
      "\"environmental_mastery\", \"personal_growth\", "
      "\"positive_relations_with_others\", \"purpose_in_life\", "
      "\"self_acceptance\". Each value is an object with keys \"score\" (integer "
      "3-21), \"keywords\" (array of strings) and \"evidence\" (array of strings).";

  tpl.transcript_section = std::string("Transcript:\n\"\"\"\n") +
                           std::string(kTranscriptMarker) + "\n\"\"\"";
  return tpl;
}

std::string render_skeleton(const PromptTemplate& tpl) {
  std::ostringstream out;
  out << tpl.role_preamble << "\n\n" << tpl.context_statement << "\n\n";
  out << "Dimensions:\n";
  for (const auto& spec : tpl.dimension_specs) {
    out << "- " << dimension_display_name(spec.name) << ": low = "
        << spec.low_descriptor << "; moderate = " << spec.moderate_descriptor
        << "; high = " << spec.high_descriptor << ".\n";
  }
  out << "\n" << tpl.scoring_instruction << "\n\n"
      << tpl.output_schema_instruction << "\n\n"
      << tpl.transcript_section << "\n";
  return out.str();
}

std::vector<std::string> validate_template(const PromptTemplate& tpl) {
  std::vector<std::string> defects;

  std::array<int, kDimensionCount> seen{};
  for (const auto& spec : tpl.dimension_specs) {
    ++seen[static_cast<std::size_t>(dimension_index(spec.name))];
    if (spec.low_descriptor.empty() || spec.moderate_descriptor.empty() ||
        spec.high_descriptor.empty()) {
      defects.push_back("empty descriptor for dimension: " +
                        std::string(dimension_display_name(spec.name)));
    }
  }
  for (Dimension d : all_dimensions()) {
    const int count = seen[static_cast<std::size_t>(dimension_index(d))];
    if (count == 0)
      defects.push_back("missing: " + std::string(dimension_display_name(d)));
    else if (count > 1)
      defects.push_back("duplicate: " + std::string(dimension_display_name(d)));
  }

  const std::size_t markers = count_occurrences(render_skeleton(tpl), kTranscriptMarker);
  if (markers == 0) defects.push_back("missing transcript slot");
  if (markers > 1) defects.push_back("duplicate transcript slot");

  return defects;
}

std::string build_prompt(const PromptTemplate& tpl, std::string_view transcript) {
  if (transcript.empty()) throw PromptError("empty transcript");
  const std::string skeleton = render_skeleton(tpl);
  const std::size_t first = skeleton.find(kTranscriptMarker);
  if (first == std::string::npos) throw PromptError("template missing transcript slot");
  if (skeleton.find(kTranscriptMarker, first + kTranscriptMarker.size()) != std::string::npos)
    throw PromptError("template has duplicate transcript slot");

  std::string prompt;
  prompt.reserve(skeleton.size() + transcript.size());
  prompt.append(skeleton, 0, first);
  prompt.append(transcript);
  prompt.append(skeleton, first + kTranscriptMarker.size(), std::string::npos);
  return prompt;
}

std::string serialize_template(const PromptTemplate& tpl) {
  std::ostringstream out;
  out << "[role]\n" << tpl.role_preamble << "\n\n";
  out << "[context]\n" << tpl.context_statement << "\n\n";
  for (const auto& spec : tpl.dimension_specs) {
    out << "[dimension " << dimension_key(spec.name) << "]\n";
    out << "low: " << spec.low_descriptor << "\n";
    out << "moderate: " << spec.moderate_descriptor << "\n";
    out << "high: " << spec.high_descriptor << "\n\n";
  }
  out << "[scoring]\n" << tpl.scoring_instruction << "\n\n";
  out << "[output]\n" << tpl.output_schema_instruction << "\n\n";
  out << "[transcript]\n" << tpl.transcript_section << "\n";
  return out.str();
}

PromptTemplate load_template_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw PromptError("cannot open template file: " + path.string());

  PromptTemplate tpl;
  std::string section;
  DimensionSpec* current_dim = nullptr;
  std::ostringstream body;

  auto flush_section = [&]() {
    const std::string content = trim(body.str());
    body.str({});
    if (section.empty()) {
      if (!content.empty())
        throw PromptError("template content before first [section] header");
      return;
    }
    if (section == "role") tpl.role_preamble = content;
    else if (section == "context") tpl.context_statement = content;
    else if (section == "scoring") tpl.scoring_instruction = content;
    else if (section == "output") tpl.output_schema_instruction = content;
    else if (section == "transcript") tpl.transcript_section = content;
    // dimension sections are parsed line by line below
  };

  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line.front() == '[' && line.back() == ']') {
      flush_section();
      section = trim(line.substr(1, line.size() - 2));
      current_dim = nullptr;
      if (section.rfind("dimension", 0) == 0) {
        const std::string key = trim(section.substr(9));
        const auto dim = parse_dimension_key(key);
        if (!dim) throw PromptError("unknown dimension in template: " + key);
        tpl.dimension_specs.push_back(DimensionSpec{*dim, "", "", ""});
        current_dim = &tpl.dimension_specs.back();
        section = "dimension";
      } else if (section != "role" && section != "context" && section != "scoring" &&
                 section != "output" && section != "transcript") {
        throw PromptError("unknown template section: [" + section + "]");
      }
      continue;
    }
    if (current_dim) {
      const std::string t = trim(line);
      if (t.rfind("low:", 0) == 0) current_dim->low_descriptor = trim(t.substr(4));
      else if (t.rfind("moderate:", 0) == 0) current_dim->moderate_descriptor = trim(t.substr(9));
      else if (t.rfind("high:", 0) == 0) current_dim->high_descriptor = trim(t.substr(5));
      else if (!t.empty()) throw PromptError("unexpected line in dimension section: " + t);
    } else {
      body << line << "\n";
    }
  }
  flush_section();
  return tpl;
}

}  // namespace pwb
