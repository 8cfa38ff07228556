#include "traceconf/io.hpp"

#include <cmath>
#include <unordered_set>

#include "traceconf/error.hpp"
#include "traceconf/text.hpp"

namespace traceconf {

namespace {

// Calls fn(line_number, line) for every non-blank line; line numbers are 1-based.
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
    std::size_t number = 0;
    std::size_t begin = 0;
    while (begin < text.size()) {
        auto end = text.find('\n', begin);
        if (end == std::string_view::npos) end = text.size();
        ++number;
        const auto line = trim(text.substr(begin, end - begin));
        if (!line.empty()) fn(number, line);
        begin = end + 1;
    }
}

bool maybe_meta(std::string_view line) {
    return line.starts_with("{\"_meta\"") && is_meta_line(nlohmann::json::parse(line, nullptr, false));
}

[[noreturn]] void fail_at(ErrorCode code, std::size_t line, const std::string& message) {
    throw Error(code, line > 0 ? "line " + std::to_string(line) + ": " + message : message);
}

double unit_feature(const nlohmann::json& doc, const char* key, std::size_t line) {
    const auto it = doc.find(key);
    if (it == doc.end()) fail_at(ErrorCode::schema, line, std::string("missing field '") + key + "'");
    if (!it->is_number()) fail_at(ErrorCode::schema, line, std::string("field '") + key + "' must be a number");
    const double v = it->get<double>();
    if (!(v >= 0.0 && v <= 1.0)) fail_at(ErrorCode::schema, line, std::string("field '") + key + "' must lie in [0, 1]");
    return v;
}

std::size_t count_feature(const nlohmann::json& doc, const char* key, std::size_t line) {
    const auto it = doc.find(key);
    if (it == doc.end()) fail_at(ErrorCode::schema, line, std::string("missing field '") + key + "'");
    if (it->is_number_unsigned()) return it->get<std::size_t>();
    if (it->is_number_integer() && it->get<long long>() >= 0) return static_cast<std::size_t>(it->get<long long>());
    if (it->is_number_float()) {
        const double v = it->get<double>();
        if (v >= 0.0 && v == std::floor(v) && v < 9.0e15) return static_cast<std::size_t>(v);
    }
    fail_at(ErrorCode::schema, line, std::string("field '") + key + "' must be a nonnegative integer");
}

}  // namespace

Corpus read_corpus(std::string_view text, bool lenient) {
    Corpus corpus;
    std::unordered_set<std::string> seen;
    for_each_line(text, [&](std::size_t number, std::string_view line) {
        if (maybe_meta(line)) return;
        try {
            auto record = parse_record(line, number);
            if (!seen.insert(record.id).second)
                fail_at(ErrorCode::schema, number, "duplicate record id '" + record.id + "'");
            corpus.records.push_back(std::move(record));
        } catch (const Error& e) {
            if (!lenient) throw;
            corpus.skipped.push_back({number, e.what()});
        }
    });
    return corpus;
}

nlohmann::ordered_json feature_record_to_json(const FeatureRecord& record) {
    nlohmann::ordered_json doc;
    doc["id"] = record.id;
    const auto values = record.features.to_array();
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        if (i < 3)
            doc[std::string(kFeatureNames[i])] = values[i];
        else
            doc[std::string(kFeatureNames[i])] = static_cast<std::size_t>(values[i]);
    }
    doc["verdict"] = to_string(record.verdict);
    doc["label"] = record.label ? nlohmann::ordered_json(*record.label) : nlohmann::ordered_json(nullptr);
    doc["dataset_tag"] = record.dataset_tag;
    return doc;
}

FeatureRecord parse_feature_line(std::string_view line, std::size_t line_number) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        fail_at(ErrorCode::parse, line_number, std::string("malformed feature line: ") + e.what());
    }
    if (!doc.is_object()) fail_at(ErrorCode::parse, line_number, "feature line must be a JSON object");

    FeatureRecord r;
    const auto id = doc.find("id");
    if (id == doc.end() || !id->is_string() || id->get<std::string>().empty())
        fail_at(ErrorCode::schema, line_number, "field 'id' must be a non-empty string");
    r.id = id->get<std::string>();
    r.features.sva = unit_feature(doc, "sva", line_number);
    r.features.clm = unit_feature(doc, "clm", line_number);
    r.features.egs = unit_feature(doc, "egs", line_number);
    r.features.trace_length = count_feature(doc, "trace_length", line_number);
    r.features.hedging_count = count_feature(doc, "hedging_count", line_number);
    r.features.negation_count = count_feature(doc, "negation_count", line_number);
    r.features.quote_count = count_feature(doc, "quote_count", line_number);

    const auto verdict = doc.find("verdict");
    if (verdict == doc.end() || !verdict->is_string())
        fail_at(ErrorCode::schema, line_number, "field 'verdict' must be a string");
    const auto v = normalize_verdict(verdict->get<std::string>());
    if (!v) fail_at(ErrorCode::schema, line_number, "field 'verdict' has unrecognised value '" + verdict->get<std::string>() + "'");
    r.verdict = *v;

    if (const auto it = doc.find("label"); it != doc.end() && !it->is_null()) {
        if (it->is_boolean())
            r.label = it->get<bool>() ? 1 : 0;
        else if (it->is_number_integer() && (it->get<long long>() == 0 || it->get<long long>() == 1))
            r.label = static_cast<int>(it->get<long long>());
        else
            fail_at(ErrorCode::schema, line_number, "field 'label' must be 0 or 1");
    }
    if (const auto it = doc.find("dataset_tag"); it != doc.end() && !it->is_null()) {
        if (!it->is_string()) fail_at(ErrorCode::schema, line_number, "field 'dataset_tag' must be a string");
        r.dataset_tag = it->get<std::string>();
    }
    return r;
}

std::vector<FeatureRecord> read_features(std::string_view text) {
    std::vector<FeatureRecord> records;
    std::unordered_set<std::string> seen;
    for_each_line(text, [&](std::size_t number, std::string_view line) {
        if (maybe_meta(line)) return;
        auto record = parse_feature_line(line, number);
        if (!seen.insert(record.id).second)
            fail_at(ErrorCode::schema, number, "duplicate record id '" + record.id + "'");
        records.push_back(std::move(record));
    });
    return records;
}

bool looks_like_record_corpus(std::string_view text) {
    bool decided = false;
    bool result = false;
    for_each_line(text, [&](std::size_t, std::string_view line) {
        if (decided || maybe_meta(line)) return;
        decided = true;
        const auto doc = nlohmann::json::parse(line, nullptr, false);
        result = doc.is_object() && doc.contains("trace_text");
    });
    return result;
}

std::string meta_line(const nlohmann::ordered_json& meta) {
    nlohmann::ordered_json doc;
    doc[std::string(kMetaKey)] = meta;
    return doc.dump();
}

bool is_meta_line(const nlohmann::json& doc) {
    return doc.is_object() && doc.size() == 1 && doc.contains(std::string(kMetaKey));
}

nlohmann::ordered_json read_meta(std::string_view text) {
    const auto whole = nlohmann::ordered_json::parse(text, nullptr, false);
    if (whole.is_object()) {
        const auto it = whole.find(std::string(kMetaKey));
        return it != whole.end() ? *it : nlohmann::ordered_json(nullptr);
    }
    nlohmann::ordered_json meta;
    bool done = false;
    for_each_line(text, [&](std::size_t, std::string_view line) {
        if (done) return;
        done = true;
        if (line.starts_with("{\"_meta\"")) {
            const auto doc = nlohmann::ordered_json::parse(line, nullptr, false);
            if (doc.is_object() && doc.size() == 1 && doc.contains(std::string(kMetaKey)))
                meta = doc.at(std::string(kMetaKey));
        }
    });
    return meta;
}

std::string format_number(double value) { return nlohmann::json(value).dump(); }

}  // namespace traceconf
