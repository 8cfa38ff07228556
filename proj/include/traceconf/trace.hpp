#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "traceconf/lexicon.hpp"

namespace traceconf {

enum class Verdict { pass, fail };
enum class Polarity { positive, negative, none };
enum class Outcome { verified, fabricated, not_found };

std::string_view to_string(Verdict v);
std::string_view to_string(Polarity p);
std::string_view to_string(Outcome o);

/// PASS/YES/TRUE/SUPPORTS and FAIL/NO/FALSE/REFUTES, case-insensitive.
std::optional<Verdict> normalize_verdict(std::string_view text);
std::optional<Outcome> parse_outcome(std::string_view text);

struct TraceRecord {
    std::string id;
    std::string evidence;
    std::string claim;
    std::string trace_text;
    Verdict verdict = Verdict::pass;
    std::optional<int> label;  // 1 = verdict correct, 0 = incorrect
    std::string dataset_tag;
};

struct Step {
    std::size_t index = 0;
    std::string text;
    Polarity conclusion = Polarity::none;
};

struct ClaimOutcome {
    std::string claim_text;
    Outcome outcome = Outcome::verified;
};

struct QuotedSpan {
    std::string text;
    std::size_t offset = 0;  // byte offset of `text` inside the trace
    std::size_t token_length = 0;
};

struct AnalysisTrace {
    std::vector<Step> steps;
    std::vector<ClaimOutcome> claim_outcomes;
    std::vector<QuotedSpan> quoted_spans;
    std::vector<std::string> tokens;
    std::size_t word_count = 0;
};

/// Parses one corpus line (a JSON object). `line_number` is only used in
/// error messages. Throws Error(parse) on malformed JSON and Error(schema) on
/// missing or ill-typed fields.
TraceRecord parse_record(std::string_view raw_line, std::size_t line_number = 0);
nlohmann::ordered_json record_to_json(const TraceRecord& record);

Polarity classify_step_conclusion(std::string_view step_text, const ConclusionLexicon& lexicon);

std::vector<QuotedSpan> extract_quoted_spans(std::string_view trace_text);

AnalysisTrace segment_trace(std::string_view trace_text,
                            const ConclusionLexicon& lexicon = ConclusionLexicon::defaults());

nlohmann::ordered_json to_json(const AnalysisTrace& trace);
AnalysisTrace analysis_trace_from_json(const nlohmann::json& doc);

}  // namespace traceconf
