#include "traceconf/text.hpp"

#include <algorithm>
#include <array>

namespace traceconf {
namespace {

constexpr std::array<std::string_view, 6> kTypographicMarks = {
    "\xE2\x80\x9C", "\xE2\x80\x9D",  // double quotes
    "\xE2\x80\x98", "\xE2\x80\x99",  // single quotes
    "\xC2\xAB", "\xC2\xBB",          // guillemets
};

bool is_ascii_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_ascii_punct(char c) {
    const auto u = static_cast<unsigned char>(c);
    return (u >= 33 && u <= 47) || (u >= 58 && u <= 64) || (u >= 91 && u <= 96) || (u >= 123 && u <= 126);
}

// Length of the punctuation mark at the front (or back) of `s`, 0 if none.
std::size_t leading_mark(std::string_view s) {
    if (s.empty()) return 0;
    if (is_ascii_punct(s.front())) return 1;
    for (auto mark : kTypographicMarks)
        if (s.starts_with(mark)) return mark.size();
    return 0;
}

std::size_t trailing_mark(std::string_view s) {
    if (s.empty()) return 0;
    if (is_ascii_punct(s.back())) return 1;
    for (auto mark : kTypographicMarks)
        if (s.ends_with(mark)) return mark.size();
    return 0;
}

}  // namespace

std::string to_lower_ascii(std::string_view text) {
    std::string out(text);
    for (auto& c : out)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return out;
}

std::string_view trim(std::string_view text) {
    while (!text.empty() && is_ascii_space(text.front())) text.remove_prefix(1);
    while (!text.empty() && is_ascii_space(text.back())) text.remove_suffix(1);
    return text;
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_ascii_space(text[i])) ++i;
        std::size_t j = i;
        while (j < text.size() && !is_ascii_space(text[j])) ++j;
        std::string_view word = text.substr(i, j - i);
        while (auto n = leading_mark(word)) word.remove_prefix(n);
        while (auto n = trailing_mark(word)) word.remove_suffix(n);
        if (!word.empty()) tokens.push_back(to_lower_ascii(word));
        i = j;
    }
    return tokens;
}

std::size_t count_phrase(const std::vector<std::string>& tokens, const std::vector<std::string>& phrase) {
    if (phrase.empty() || phrase.size() > tokens.size()) return 0;
    std::size_t count = 0;
    for (std::size_t i = 0; i + phrase.size() <= tokens.size(); ++i)
        if (std::equal(phrase.begin(), phrase.end(), tokens.begin() + static_cast<std::ptrdiff_t>(i)))
            ++count;
    return count;
}

bool contains_phrase(const std::vector<std::string>& tokens, const std::vector<std::string>& phrase) {
    if (phrase.empty() || phrase.size() > tokens.size()) return false;
    return std::search(tokens.begin(), tokens.end(), phrase.begin(), phrase.end()) != tokens.end();
}

}  // namespace traceconf
