#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace traceconf {

/// A phrase list compiled to token sequences with the shared tokenizer.
class PhraseList {
public:
    PhraseList() = default;
    explicit PhraseList(std::vector<std::string> phrases);

    const std::vector<std::string>& phrases() const { return phrases_; }
    const std::vector<std::vector<std::string>>& compiled() const { return compiled_; }

    bool matches_any(const std::vector<std::string>& tokens) const;
    std::size_t count_in(const std::vector<std::string>& tokens) const;

private:
    std::vector<std::string> phrases_;
    std::vector<std::vector<std::string>> compiled_;
};

struct ConclusionLexicon {
    PhraseList positive;
    PhraseList negative;

    static ConclusionLexicon defaults();
};

struct SurfaceLexicons {
    PhraseList hedging;
    PhraseList negation;

    static SurfaceLexicons defaults();
};

struct Lexicons {
    ConclusionLexicon conclusion = ConclusionLexicon::defaults();
    SurfaceLexicons surface = SurfaceLexicons::defaults();

    /// Keys "positive", "negative", "hedging", "negation"; absent keys keep
    /// the defaults. Throws Error(config) on a malformed document.
    static Lexicons from_json(const nlohmann::json& doc);
    nlohmann::ordered_json to_json() const;
};

}  // namespace traceconf
