#include "traceconf/lexicon.hpp"

#include "traceconf/error.hpp"
#include "traceconf/text.hpp"

namespace traceconf {

PhraseList::PhraseList(std::vector<std::string> phrases) : phrases_(std::move(phrases)) {
    compiled_.reserve(phrases_.size());
    for (const auto& p : phrases_) {
        auto tokens = tokenize(p);
        if (!tokens.empty()) compiled_.push_back(std::move(tokens));
    }
}

bool PhraseList::matches_any(const std::vector<std::string>& tokens) const {
    for (const auto& phrase : compiled_)
        if (contains_phrase(tokens, phrase)) return true;
    return false;
}

std::size_t PhraseList::count_in(const std::vector<std::string>& tokens) const {
    std::size_t n = 0;
    for (const auto& phrase : compiled_) n += count_phrase(tokens, phrase);
    return n;
}

ConclusionLexicon ConclusionLexicon::defaults() {
    static const ConclusionLexicon lexicon{
        PhraseList({"supported", "confirmed", "verified", "consistent", "accurate", "found"}),
        PhraseList({"not supported", "fabricated", "no evidence", "not found", "contradicts", "inconsistent",
                    "refuted", "unsupported"}),
    };
    return lexicon;
}

SurfaceLexicons SurfaceLexicons::defaults() {
    static const SurfaceLexicons lexicons{
        PhraseList({"however", "partially", "unclear", "possibly", "may", "might", "somewhat", "arguably"}),
        PhraseList({"not", "no", "never", "none", "cannot", "without"}),
    };
    return lexicons;
}

namespace {

PhraseList phrases_or(const nlohmann::json& doc, const char* key, const PhraseList& fallback) {
    if (!doc.contains(key)) return fallback;
    const auto& node = doc.at(key);
    if (!node.is_array()) throw Error(ErrorCode::config, std::string("lexicon key '") + key + "' must be a list");
    std::vector<std::string> phrases;
    for (const auto& item : node) {
        if (!item.is_string())
            throw Error(ErrorCode::config, std::string("lexicon key '") + key + "' must hold strings");
        phrases.push_back(item.get<std::string>());
    }
    return PhraseList(std::move(phrases));
}

}  // namespace

Lexicons Lexicons::from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw Error(ErrorCode::config, "lexicon document must be an object");
    for (const auto& [key, value] : doc.items()) {
        if (key != "positive" && key != "negative" && key != "hedging" && key != "negation")
            throw Error(ErrorCode::config, "unknown lexicon key '" + key + "'");
    }
    Lexicons lex;
    lex.conclusion.positive = phrases_or(doc, "positive", lex.conclusion.positive);
    lex.conclusion.negative = phrases_or(doc, "negative", lex.conclusion.negative);
    lex.surface.hedging = phrases_or(doc, "hedging", lex.surface.hedging);
    lex.surface.negation = phrases_or(doc, "negation", lex.surface.negation);
    return lex;
}

nlohmann::ordered_json Lexicons::to_json() const {
    nlohmann::ordered_json doc;
    doc["positive"] = conclusion.positive.phrases();
    doc["negative"] = conclusion.negative.phrases();
    doc["hedging"] = surface.hedging.phrases();
    doc["negation"] = surface.negation.phrases();
    return doc;
}

}  // namespace traceconf
