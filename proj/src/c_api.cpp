#include "traceconf/traceconf.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "traceconf/error.hpp"
#include "traceconf/io.hpp"
#include "traceconf/pipeline.hpp"
#include "traceconf/signals.hpp"

struct tc_extractor {
    traceconf::FeatureExtractor extractor;
};

struct tc_model {
    traceconf::ConfidenceModel model;
    std::string text;  // the document it was trained into or loaded from
};

namespace {

thread_local std::string last_error;

tc_status status_of(traceconf::ErrorCode code) {
    using traceconf::ErrorCode;
    switch (code) {
        case ErrorCode::parse: return TC_ERR_PARSE;
        case ErrorCode::schema: return TC_ERR_SCHEMA;
        case ErrorCode::input: return TC_ERR_INPUT;
        case ErrorCode::config: return TC_ERR_CONFIG;
        case ErrorCode::io: return TC_ERR_IO;
        case ErrorCode::state: return TC_ERR_STATE;
        case ErrorCode::degenerate_labels: return TC_ERR_DEGENERATE_LABELS;
        case ErrorCode::insufficient_data: return TC_ERR_INSUFFICIENT_DATA;
        case ErrorCode::stratification: return TC_ERR_STRATIFICATION;
        case ErrorCode::remote_provider: return TC_ERR_REMOTE_PROVIDER;
    }
    return TC_ERR_INTERNAL;
}

template <typename Fn>
tc_status guarded(Fn&& fn) {
    try {
        last_error.clear();
        fn();
        return TC_OK;
    } catch (const traceconf::Error& e) {
        last_error = e.what();
        return status_of(e.code());
    } catch (const std::bad_alloc&) {
        last_error = "out of memory";
        return TC_ERR_INTERNAL;
    } catch (const std::exception& e) {
        last_error = e.what();
        return TC_ERR_INTERNAL;
    } catch (...) {
        last_error = "unknown failure";
        return TC_ERR_INTERNAL;
    }
}

tc_status invalid(const char* message) {
    last_error = message;
    return TC_ERR_INVALID_ARGUMENT;
}

char* copy_out(const std::string& text) {
    auto* out = static_cast<char*>(std::malloc(text.size() + 1));
    if (out == nullptr) throw std::bad_alloc();
    std::memcpy(out, text.c_str(), text.size() + 1);
    return out;
}

traceconf::RunConfig config_of(const char* config_json) {
    if (config_json == nullptr || *config_json == '\0') return {};
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(config_json);
    } catch (const nlohmann::json::parse_error& e) {
        throw traceconf::Error(traceconf::ErrorCode::config, std::string("malformed configuration: ") + e.what());
    }
    return traceconf::RunConfig::from_json(doc);
}

}  // namespace

extern "C" {

const char* tc_version(void) {
    static const std::string version(traceconf::kVersion);
    return version.c_str();
}

const char* tc_last_error(void) { return last_error.c_str(); }

const char* tc_status_name(tc_status status) {
    switch (status) {
        case TC_OK: return "ok";
        case TC_ERR_PARSE: return "parse";
        case TC_ERR_SCHEMA: return "schema";
        case TC_ERR_INPUT: return "input";
        case TC_ERR_CONFIG: return "config";
        case TC_ERR_IO: return "io";
        case TC_ERR_STATE: return "state";
        case TC_ERR_DEGENERATE_LABELS: return "degenerate_labels";
        case TC_ERR_INSUFFICIENT_DATA: return "insufficient_data";
        case TC_ERR_STRATIFICATION: return "stratification";
        case TC_ERR_REMOTE_PROVIDER: return "remote_provider";
        case TC_ERR_INVALID_ARGUMENT: return "invalid_argument";
        case TC_ERR_INTERNAL: return "internal";
    }
    return "unknown";
}

int tc_status_exit_code(tc_status status) {
    switch (status) {
        case TC_OK: return 0;
        case TC_ERR_PARSE:
        case TC_ERR_SCHEMA:
        case TC_ERR_INPUT:
        case TC_ERR_CONFIG:
        case TC_ERR_IO:
        case TC_ERR_INVALID_ARGUMENT: return 2;
        case TC_ERR_REMOTE_PROVIDER: return 3;
        case TC_ERR_DEGENERATE_LABELS:
        case TC_ERR_INSUFFICIENT_DATA:
        case TC_ERR_STRATIFICATION: return 4;
        case TC_ERR_STATE:
        case TC_ERR_INTERNAL: return 1;
    }
    return 1;
}

void tc_string_free(char* text) { std::free(text); }

tc_status tc_extractor_create(const char* config_json, tc_extractor** out) {
    if (out == nullptr) return invalid("output pointer is null");
    *out = nullptr;
    return guarded([&] {
        const auto config = config_of(config_json);
        traceconf::validate(config);
        traceconf::AlignmentProvider provider;
        if (config.provider == "nli") provider = {traceconf::ProviderKind::nli_remote, config.nli_endpoint};
        *out = new tc_extractor{traceconf::FeatureExtractor(provider, traceconf::EgsConfig{config.egs_threshold},
                                                            traceconf::Lexicons::from_json(config.lexicon_overrides))};
    });
}

void tc_extractor_destroy(tc_extractor* extractor) { delete extractor; }

tc_status tc_extract_record(const tc_extractor* extractor, const char* record_line, char** out_feature_line) {
    if (extractor == nullptr || record_line == nullptr || out_feature_line == nullptr)
        return invalid("null argument");
    *out_feature_line = nullptr;
    return guarded([&] {
        const auto r = traceconf::parse_record(record_line);
        const auto features = extractor->extractor.extract(r);
        *out_feature_line =
            copy_out(traceconf::feature_record_to_json({r.id, features, r.verdict, r.label, r.dataset_tag}).dump());
    });
}

tc_status tc_extract_corpus(const char* corpus_text, const char* config_json, char** out_features,
                            char** out_summary) {
    if (corpus_text == nullptr || out_features == nullptr) return invalid("null argument");
    *out_features = nullptr;
    if (out_summary != nullptr) *out_summary = nullptr;
    return guarded([&] {
        auto config = config_of(config_json);
        if (config.command.empty()) config.command = "extract";
        const auto outcome = traceconf::run_extract(corpus_text, config);
        if (out_summary != nullptr) *out_summary = copy_out(outcome.summary.dump(2) + "\n");
        if (!outcome.failed_ids.empty()) {
            std::string ids;
            for (const auto& id : outcome.failed_ids) ids += (ids.empty() ? "" : ", ") + id;
            throw traceconf::Error(traceconf::ErrorCode::remote_provider,
                                   "extraction failed for records " + ids + ": " + outcome.error);
        }
        *out_features = copy_out(outcome.features);
    });
}

tc_status tc_model_train(const char* features_text, const char* config_json, tc_model** out) {
    if (features_text == nullptr || out == nullptr) return invalid("null argument");
    *out = nullptr;
    return guarded([&] {
        auto config = config_of(config_json);
        if (config.command.empty()) config.command = "train";
        auto text = traceconf::run_train(features_text, config);
        auto model = traceconf::model_from_json(nlohmann::json::parse(text));
        *out = new tc_model{std::move(model), std::move(text)};
    });
}

tc_status tc_model_load(const char* model_text, tc_model** out) {
    if (model_text == nullptr || out == nullptr) return invalid("null argument");
    *out = nullptr;
    return guarded([&] {
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(model_text);
        } catch (const nlohmann::json::parse_error& e) {
            throw traceconf::Error(traceconf::ErrorCode::parse, std::string("malformed model file: ") + e.what());
        }
        *out = new tc_model{traceconf::model_from_json(doc), model_text};
    });
}

tc_status tc_model_save(const tc_model* model, char** out_text) {
    if (model == nullptr || out_text == nullptr) return invalid("null argument");
    *out_text = nullptr;
    return guarded([&] { *out_text = copy_out(model->text); });
}

void tc_model_destroy(tc_model* model) { delete model; }

tc_status tc_model_score(const tc_model* model, const char* feature_line, double* out_confidence) {
    if (model == nullptr || feature_line == nullptr || out_confidence == nullptr) return invalid("null argument");
    return guarded([&] {
        const auto r = traceconf::parse_feature_line(feature_line);
        *out_confidence = traceconf::lr_score(model->model, r.features);
    });
}

tc_status tc_model_score_corpus(const tc_model* model, const char* features_text, const char* config_json,
                                char** out_scored) {
    if (model == nullptr || features_text == nullptr || out_scored == nullptr) return invalid("null argument");
    *out_scored = nullptr;
    return guarded([&] {
        auto config = config_of(config_json);
        if (config.command.empty()) config.command = "score";
        *out_scored = copy_out(traceconf::run_score(model->text, features_text, config));
    });
}

tc_status tc_evaluate(const char* features_text, const char* config_json, char** out_report) {
    if (features_text == nullptr || out_report == nullptr) return invalid("null argument");
    *out_report = nullptr;
    return guarded([&] {
        auto config = config_of(config_json);
        if (config.command.empty()) config.command = "evaluate";
        *out_report = copy_out(traceconf::run_evaluate(features_text, config));
    });
}

tc_status tc_route(const tc_model* model, const char* features_text, const char* config_json, char** out_report) {
    if (model == nullptr || features_text == nullptr || out_report == nullptr) return invalid("null argument");
    *out_report = nullptr;
    return guarded([&] {
        auto config = config_of(config_json);
        if (config.command.empty()) config.command = "route";
        *out_report = copy_out(traceconf::run_route(model->text, features_text, config));
    });
}

tc_status tc_ablate(const char* features_text, const char* config_json, char** out_table) {
    if (features_text == nullptr || out_table == nullptr) return invalid("null argument");
    *out_table = nullptr;
    return guarded([&] {
        auto config = config_of(config_json);
        if (config.command.empty()) config.command = "ablate";
        *out_table = copy_out(traceconf::run_ablate(features_text, config));
    });
}

tc_status tc_transfer(const char* const* names, const char* const* features_texts, size_t count,
                      const char* config_json, char** out_matrix) {
    if (names == nullptr || features_texts == nullptr || out_matrix == nullptr) return invalid("null argument");
    *out_matrix = nullptr;
    for (size_t i = 0; i < count; ++i)
        if (names[i] == nullptr || features_texts[i] == nullptr) return invalid("null corpus entry");
    return guarded([&] {
        auto config = config_of(config_json);
        if (config.command.empty()) config.command = "transfer";
        std::vector<std::pair<std::string, std::string>> corpora;
        for (size_t i = 0; i < count; ++i) corpora.emplace_back(names[i], features_texts[i]);
        *out_matrix = copy_out(traceconf::run_transfer(corpora, config));
    });
}

tc_status tc_synthesize(const char* config_json, char** out_corpus) {
    if (out_corpus == nullptr) return invalid("null argument");
    *out_corpus = nullptr;
    return guarded([&] {
        auto config = config_of(config_json);
        if (config.command.empty()) config.command = "synth";
        *out_corpus = copy_out(traceconf::run_synth(config));
    });
}

}  // extern "C"
