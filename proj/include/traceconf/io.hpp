#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "traceconf/dataset.hpp"
#include "traceconf/trace.hpp"

namespace traceconf {

inline constexpr std::string_view kMetaKey = "_meta";

struct SkippedLine {
    std::size_t line = 0;
    std::string message;
};

struct Corpus {
    std::vector<TraceRecord> records;
    std::vector<SkippedLine> skipped;
};

/// Reads a record corpus (one JSON object per line). Blank lines and the
/// metadata line are ignored. Fail-fast unless `lenient`, in which case bad
/// lines are reported in `skipped`. Duplicate ids are schema errors.
Corpus read_corpus(std::string_view text, bool lenient = false);

nlohmann::ordered_json feature_record_to_json(const FeatureRecord& record);
FeatureRecord parse_feature_line(std::string_view line, std::size_t line_number = 0);
std::vector<FeatureRecord> read_features(std::string_view text);

/// True when the first data line carries "trace_text", i.e. the text is a
/// record corpus rather than a feature file.
bool looks_like_record_corpus(std::string_view text);

/// `{"_meta": {...}}` line embedding the version and effective configuration.
std::string meta_line(const nlohmann::ordered_json& meta);
bool is_meta_line(const nlohmann::json& doc);
/// The `_meta` object of a JSONL artifact's first line or a JSON document's
/// top level; null when there is none.
nlohmann::ordered_json read_meta(std::string_view text);

/// Shortest round-trip text for a double, as written into every artifact.
std::string format_number(double value);

}  // namespace traceconf
