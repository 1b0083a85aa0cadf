#include "pwb/text.hpp"

#include <cctype>

namespace pwb::text {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::string normalize_token(std::string_view raw) {
  std::size_t begin = 0;
  std::size_t end = raw.size();
  while (begin < end && is_punct(raw[begin])) ++begin;
  while (end > begin && is_punct(raw[end - 1])) --end;
  std::string out;
  out.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i) {
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(raw[i]))));
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) {
      std::string tok = normalize_token(text.substr(start, i - start));
      if (!tok.empty()) tokens.push_back(std::move(tok));
    }
  }
  return tokens;
}

bool contains_token_run(const std::vector<std::string>& haystack,
                        const std::vector<std::string>& needle) {
  if (needle.empty() || needle.size() > haystack.size()) return false;
  for (std::size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
    bool match = true;
    for (std::size_t j = 0; j < needle.size(); ++j) {
      if (haystack[i + j] != needle[j]) {
        match = false;
        break;
      }
    }
    if (match) return true;
  }
  return false;
}

std::size_t longest_common_token_run(const std::vector<std::string>& a,
                                     const std::vector<std::string>& b) {
  if (a.empty() || b.empty()) return 0;
  // row[j] = length of common run ending at a[i-1], b[j-1]
  std::vector<std::size_t> row(b.size() + 1, 0);
  std::size_t best = 0;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = 0;  // row[j-1] from previous i
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t up_left = diag;
      diag = row[j];
      row[j] = (a[i - 1] == b[j - 1]) ? up_left + 1 : 0;
      if (row[j] > best) best = row[j];
    }
  }
  return best;
}

std::string join(const std::vector<std::string>& tokens, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out.append(sep);
    out.append(tokens[i]);
  }
  return out;
}

}  // namespace pwb::text
