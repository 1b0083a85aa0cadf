#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace pwb::text {

// Normalization used everywhere tokens are compared: lowercase, split on
// whitespace, strip leading/trailing punctuation from each token, drop tokens
// that become empty. Interior punctuation (don't, mother-in-law) is kept.
std::string normalize_token(std::string_view raw);

std::vector<std::string> tokenize(std::string_view text);

// True iff `needle` occurs as a contiguous subsequence of `haystack`.
// An empty needle never matches.
bool contains_token_run(const std::vector<std::string>& haystack,
                        const std::vector<std::string>& needle);

// Length of the longest contiguous token run common to both sequences.
std::size_t longest_common_token_run(const std::vector<std::string>& a,
                                     const std::vector<std::string>& b);

std::string join(const std::vector<std::string>& tokens, std::string_view sep = " ");

}  // namespace pwb::text
