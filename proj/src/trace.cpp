#include "traceconf/trace.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "traceconf/error.hpp"
#include "traceconf/text.hpp"

namespace traceconf {

std::string_view to_string(Verdict v) { return v == Verdict::pass ? "PASS" : "FAIL"; }

std::string_view to_string(Polarity p) {
    switch (p) {
        case Polarity::positive: return "POSITIVE";
        case Polarity::negative: return "NEGATIVE";
        case Polarity::none: return "NONE";
    }
    return "NONE";
}

std::string_view to_string(Outcome o) {
    switch (o) {
        case Outcome::verified: return "VERIFIED";
        case Outcome::fabricated: return "FABRICATED";
        case Outcome::not_found: return "NOT_FOUND";
    }
    return "NOT_FOUND";
}

std::optional<Verdict> normalize_verdict(std::string_view text) {
    static constexpr std::array<std::string_view, 4> pass = {"pass", "yes", "true", "supports"};
    static constexpr std::array<std::string_view, 4> fail = {"fail", "no", "false", "refutes"};
    const auto lowered = to_lower_ascii(trim(text));
    if (std::find(pass.begin(), pass.end(), lowered) != pass.end()) return Verdict::pass;
    if (std::find(fail.begin(), fail.end(), lowered) != fail.end()) return Verdict::fail;
    return std::nullopt;
}

std::optional<Outcome> parse_outcome(std::string_view text) {
    const auto lowered = to_lower_ascii(trim(text));
    if (lowered == "verified") return Outcome::verified;
    if (lowered == "fabricated") return Outcome::fabricated;
    if (lowered == "not_found" || lowered == "not found" || lowered == "not-found") return Outcome::not_found;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Records

namespace {

[[noreturn]] void fail_at(ErrorCode code, std::size_t line_number, const std::string& message) {
    if (line_number > 0) throw Error(code, "line " + std::to_string(line_number) + ": " + message);
    throw Error(code, message);
}

std::string required_string(const nlohmann::json& doc, const char* key, std::size_t line_number) {
    const auto it = doc.find(key);
    if (it == doc.end() || it->is_null()) fail_at(ErrorCode::schema, line_number, std::string("missing required field '") + key + "'");
    if (!it->is_string()) fail_at(ErrorCode::schema, line_number, std::string("field '") + key + "' must be a string");
    return it->get<std::string>();
}

}  // namespace

TraceRecord parse_record(std::string_view raw_line, std::size_t line_number) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(raw_line);
    } catch (const nlohmann::json::parse_error& e) {
        fail_at(ErrorCode::parse, line_number, std::string("malformed record: ") + e.what());
    }
    if (!doc.is_object()) fail_at(ErrorCode::parse, line_number, "record must be a JSON object");

    TraceRecord record;
    record.id = required_string(doc, "id", line_number);
    if (record.id.empty()) fail_at(ErrorCode::schema, line_number, "field 'id' must be non-empty");
    record.evidence = required_string(doc, "evidence", line_number);
    record.claim = required_string(doc, "claim", line_number);
    record.trace_text = required_string(doc, "trace_text", line_number);

    const auto verdict_text = required_string(doc, "verdict", line_number);
    const auto verdict = normalize_verdict(verdict_text);
    if (!verdict) fail_at(ErrorCode::schema, line_number, "field 'verdict' has unrecognised value '" + verdict_text + "'");
    record.verdict = *verdict;

    if (const auto it = doc.find("label"); it != doc.end() && !it->is_null()) {
        if (it->is_boolean()) {
            record.label = it->get<bool>() ? 1 : 0;
        } else if (it->is_number_integer() && (it->get<long long>() == 0 || it->get<long long>() == 1)) {
            record.label = static_cast<int>(it->get<long long>());
        } else {
            fail_at(ErrorCode::schema, line_number, "field 'label' must be 0 or 1");
        }
    }
    if (const auto it = doc.find("dataset_tag"); it != doc.end() && !it->is_null()) {
        if (!it->is_string()) fail_at(ErrorCode::schema, line_number, "field 'dataset_tag' must be a string");
        record.dataset_tag = it->get<std::string>();
    }
    return record;
}

nlohmann::ordered_json record_to_json(const TraceRecord& record) {
    nlohmann::ordered_json doc;
    doc["id"] = record.id;
    doc["evidence"] = record.evidence;
    doc["claim"] = record.claim;
    doc["trace_text"] = record.trace_text;
    doc["verdict"] = to_string(record.verdict);
    if (record.label) doc["label"] = *record.label;
    doc["dataset_tag"] = record.dataset_tag;
    return doc;
}

// ---------------------------------------------------------------------------
// Conclusions

namespace {

// Outcome keywords such as NOT_FOUND tokenize as one word; matching treats
// underscores as spaces so "not found" lexicon entries see them.
std::vector<std::string> conclusion_tokens(std::string_view text) {
    std::string spaced(text);
    std::replace(spaced.begin(), spaced.end(), '_', ' ');
    return tokenize(spaced);
}

}  // namespace

Polarity classify_step_conclusion(std::string_view step_text, const ConclusionLexicon& lexicon) {
    const auto tokens = conclusion_tokens(step_text);
    // Negative first: "not supported" contains "supported".
    if (lexicon.negative.matches_any(tokens)) return Polarity::negative;
    if (lexicon.positive.matches_any(tokens)) return Polarity::positive;
    return Polarity::none;
}

// ---------------------------------------------------------------------------
// Quotes

namespace {

constexpr std::string_view kLeftDouble = "\xE2\x80\x9C";
constexpr std::string_view kRightDouble = "\xE2\x80\x9D";

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

void add_span(std::vector<QuotedSpan>& spans, std::string_view text, std::size_t begin, std::size_t end) {
    QuotedSpan span;
    span.text = std::string(text.substr(begin, end - begin));
    span.offset = begin;
    span.token_length = tokenize(span.text).size();
    if (span.token_length > 0) spans.push_back(std::move(span));
}

// Closing straight single quote on the same line, or npos. Apostrophes inside
// words ("don't") neither open nor close a span.
std::size_t closing_single(std::string_view text, std::size_t open) {
    for (std::size_t k = open + 1; k < text.size() && text[k] != '\n'; ++k) {
        if (text[k] != '\'') continue;
        const bool after_ok = k + 1 == text.size() || !is_word_char(text[k + 1]);
        if (k > open + 1 && !is_space(text[k - 1]) && after_ok) return k;
    }
    return std::string_view::npos;
}

}  // namespace

std::vector<QuotedSpan> extract_quoted_spans(std::string_view text) {
    std::vector<QuotedSpan> spans;
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] == '"') {
            const auto close = text.find('"', i + 1);
            if (close == std::string_view::npos) {
                ++i;  // unmatched: discard and keep scanning for other styles
                continue;
            }
            add_span(spans, text, i + 1, close);
            i = close + 1;
        } else if (text.substr(i).starts_with(kLeftDouble)) {
            const auto begin = i + kLeftDouble.size();
            const auto close = text.find(kRightDouble, begin);
            if (close == std::string_view::npos) {
                i = begin;
                continue;
            }
            add_span(spans, text, begin, close);
            i = close + kRightDouble.size();
        } else if (text[i] == '\'') {
            const bool opens = (i == 0 || !is_word_char(text[i - 1])) && i + 1 < text.size() && !is_space(text[i + 1]);
            const auto close = opens ? closing_single(text, i) : std::string_view::npos;
            if (close == std::string_view::npos) {
                ++i;
                continue;
            }
            add_span(spans, text, i + 1, close);
            i = close + 1;
        } else {
            ++i;
        }
    }
    return spans;
}

// ---------------------------------------------------------------------------
// Segmentation

namespace {

enum class Marker { none, claim, step, bullet, ordinal };

bool starts_with_word(std::string_view lowered, std::string_view word) {
    return lowered.starts_with(word) && (lowered.size() == word.size() || !std::isalpha(static_cast<unsigned char>(lowered[word.size()])));
}

Marker marker_of(std::string_view content) {
    const auto lowered = to_lower_ascii(content.substr(0, std::min<std::size_t>(content.size(), 16)));
    if (starts_with_word(lowered, "claim")) return Marker::claim;
    if (starts_with_word(lowered, "step")) return Marker::step;
    if (content.size() >= 2 && (content[0] == '-' || content[0] == '*' || content[0] == '+') && content[1] == ' ')
        return Marker::bullet;
    if (content.starts_with("\xE2\x80\xA2")) return Marker::bullet;
    std::size_t d = 0;
    while (d < content.size() && std::isdigit(static_cast<unsigned char>(content[d]))) ++d;
    if (d > 0 && d < content.size() && (content[d] == '.' || content[d] == ')') &&
        (d + 1 == content.size() || is_space(content[d + 1])))
        return Marker::ordinal;
    return Marker::none;
}

bool is_continuation(std::string_view content) {
    return content.starts_with("->") || content.starts_with("\xE2\x86\x92");
}

// The line that states the final verdict is not a reasoning step.
bool is_verdict_line(std::string_view content) {
    auto lowered = to_lower_ascii(content.substr(0, std::min<std::size_t>(content.size(), 24)));
    std::string_view view(lowered);
    while (!view.empty() && (view.front() == '"' || view.front() == '{' || view.front() == '*' || view.front() == '#'))
        view.remove_prefix(1);
    return starts_with_word(view, "final answer") || starts_with_word(view, "final_answer") ||
           starts_with_word(view, "final verdict") || starts_with_word(view, "verdict");
}

std::size_t indentation(std::string_view line) {
    std::size_t n = 0;
    for (char c : line) {
        if (c == ' ') ++n;
        else if (c == '\t') n += 4;
        else break;
    }
    return n;
}

struct OpenStep {
    std::string text;
    std::size_t indent = 0;
    Marker marker = Marker::none;
};

std::optional<Outcome> last_outcome_keyword(std::string_view text) {
    const auto tokens = tokenize(text);
    std::optional<Outcome> found;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const auto& t = tokens[i];
        const bool negated = i > 0 && tokens[i - 1] == "not";
        if (t == "verified") {
            // "not verified": the claim could not be checked.
            found = negated ? Outcome::not_found : Outcome::verified;
        } else if (t == "fabricated") {
            found = Outcome::fabricated;
        } else if (t == "not_found" || t == "not-found" || (t == "not" && i + 1 < tokens.size() && tokens[i + 1] == "found")) {
            found = Outcome::not_found;
        }
    }
    return found;
}

std::string claim_text_of(const OpenStep& step) {
    const auto quotes = extract_quoted_spans(step.text);
    if (!quotes.empty()) return quotes.front().text;

    std::string_view rest = step.text;
    if (step.marker == Marker::claim) {
        rest.remove_prefix(std::min<std::size_t>(5, rest.size()));
        while (!rest.empty() && (std::isdigit(static_cast<unsigned char>(rest.front())) || is_space(rest.front())))
            rest.remove_prefix(1);
    } else {
        const auto space = rest.find(' ');
        rest = space == std::string_view::npos ? std::string_view{} : rest.substr(space);
    }
    while (!rest.empty() && (rest.front() == ':' || rest.front() == '-' || rest.front() == '.' || is_space(rest.front())))
        rest.remove_prefix(1);
    auto cut = rest.find("->");
    cut = std::min(cut, rest.find("\xE2\x86\x92"));
    return std::string(trim(rest.substr(0, cut)));
}

}  // namespace

AnalysisTrace segment_trace(std::string_view trace_text, const ConclusionLexicon& lexicon) {
    AnalysisTrace trace;
    trace.tokens = tokenize(trace_text);
    trace.word_count = trace.tokens.size();
    trace.quoted_spans = extract_quoted_spans(trace_text);

    std::vector<OpenStep> raw_steps;
    std::optional<OpenStep> current;
    auto close = [&] {
        if (current) raw_steps.push_back(std::move(*current));
        current.reset();
    };

    std::size_t pos = 0;
    while (pos <= trace_text.size()) {
        auto end = trace_text.find('\n', pos);
        if (end == std::string_view::npos) end = trace_text.size();
        const auto line = trace_text.substr(pos, end - pos);
        pos = end + 1;

        const auto content = trim(line);
        if (content.empty()) {
            close();
            continue;
        }
        if (is_verdict_line(content)) {
            close();
            continue;
        }
        const auto marker = marker_of(content);
        const auto indent = indentation(line);
        if (current && marker == Marker::none && (is_continuation(content) || indent > current->indent)) {
            current->text += ' ';
            current->text += content;
            continue;
        }
        close();
        current = OpenStep{std::string(content), indent, marker};
    }
    close();

    trace.steps.reserve(raw_steps.size());
    for (std::size_t i = 0; i < raw_steps.size(); ++i) {
        const auto& raw = raw_steps[i];
        trace.steps.push_back(Step{i, raw.text, classify_step_conclusion(raw.text, lexicon)});
        if (raw.marker == Marker::claim || raw.marker == Marker::bullet || raw.marker == Marker::ordinal) {
            if (const auto outcome = last_outcome_keyword(raw.text))
                trace.claim_outcomes.push_back(ClaimOutcome{claim_text_of(raw), *outcome});
        }
    }
    return trace;
}

// ---------------------------------------------------------------------------
// Serialization

nlohmann::ordered_json to_json(const AnalysisTrace& trace) {
    nlohmann::ordered_json doc;
    doc["steps"] = nlohmann::ordered_json::array();
    for (const auto& s : trace.steps)
        doc["steps"].push_back({{"index", s.index}, {"text", s.text}, {"conclusion", to_string(s.conclusion)}});
    doc["claim_outcomes"] = nlohmann::ordered_json::array();
    for (const auto& c : trace.claim_outcomes)
        doc["claim_outcomes"].push_back({{"claim_text", c.claim_text}, {"outcome", to_string(c.outcome)}});
    doc["quoted_spans"] = nlohmann::ordered_json::array();
    for (const auto& q : trace.quoted_spans)
        doc["quoted_spans"].push_back({{"text", q.text}, {"offset", q.offset}, {"token_length", q.token_length}});
    doc["word_count"] = trace.word_count;
    return doc;
}

AnalysisTrace analysis_trace_from_json(const nlohmann::json& doc) {
    AnalysisTrace trace;
    try {
        for (const auto& s : doc.at("steps")) {
            const auto polarity = s.at("conclusion").get<std::string>();
            Polarity p = Polarity::none;
            if (polarity == "POSITIVE") p = Polarity::positive;
            else if (polarity == "NEGATIVE") p = Polarity::negative;
            else if (polarity != "NONE") throw Error(ErrorCode::schema, "unknown conclusion '" + polarity + "'");
            trace.steps.push_back(Step{s.at("index").get<std::size_t>(), s.at("text").get<std::string>(), p});
        }
        for (const auto& c : doc.at("claim_outcomes")) {
            const auto text = c.at("outcome").get<std::string>();
            const auto outcome = parse_outcome(text);
            if (!outcome) throw Error(ErrorCode::schema, "unknown outcome '" + text + "'");
            trace.claim_outcomes.push_back(ClaimOutcome{c.at("claim_text").get<std::string>(), *outcome});
        }
        for (const auto& q : doc.at("quoted_spans"))
            trace.quoted_spans.push_back(QuotedSpan{q.at("text").get<std::string>(), q.at("offset").get<std::size_t>(),
                                                    q.at("token_length").get<std::size_t>()});
        trace.word_count = doc.at("word_count").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::schema, std::string("malformed analysis trace: ") + e.what());
    }
    return trace;
}

}  // namespace traceconf
