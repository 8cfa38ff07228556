#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace traceconf {

/// Shared tokenizer: ASCII-lowercase, split on whitespace, strip leading and
/// trailing punctuation (ASCII plus typographic quotes). Empty tokens are dropped.
std::vector<std::string> tokenize(std::string_view text);

std::string to_lower_ascii(std::string_view text);
std::string_view trim(std::string_view text);

/// Number of (possibly overlapping) occurrences of `phrase` as a contiguous token run.
std::size_t count_phrase(const std::vector<std::string>& tokens,
                         const std::vector<std::string>& phrase);

bool contains_phrase(const std::vector<std::string>& tokens,
                     const std::vector<std::string>& phrase);

}  // namespace traceconf
