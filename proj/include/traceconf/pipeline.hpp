#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "traceconf/calibration.hpp"

namespace traceconf {

inline constexpr std::string_view kVersion = "0.1.0";

/// Effective configuration of one CLI run; echoed into every artifact.
struct RunConfig {
    std::string command;
    std::vector<std::string> inputs;
    std::string output;
    std::string model;
    std::uint64_t seed = 42;
    std::string provider = "regex";
    std::string nli_endpoint;
    double egs_threshold = 0.8;
    std::size_t folds = 5;
    std::size_t resamples = 2000;
    std::size_t bins = 10;
    std::string lexicons;  // path, recorded for provenance
    nlohmann::json lexicon_overrides = nlohmann::json::object();
    bool lenient = false;
    std::string mask;  // empty: all features (ablate: the default subset grid)
    double lambda = 0.1;
    std::optional<double> threshold;
    std::string timestamp;
    std::size_t workers = 0;  // 0: hardware concurrency
    std::size_t n = 1000;
    double error_rate = 0.2;
    std::string profile = "strong";
    std::string dataset_tag;

    nlohmann::ordered_json to_json() const;
    static RunConfig from_json(const nlohmann::json& doc);
};

struct ExtractOutcome {
    std::string features;  // feature file text; empty when any record failed
    nlohmann::ordered_json summary;
    std::vector<std::string> failed_ids;  // records whose remote classification failed
    std::string error;                    // first remote failure message
};

/// Every record is attempted. Remote-provider failures do not throw; they are
/// reported through `failed_ids` and no feature text is produced.
ExtractOutcome run_extract(std::string_view corpus_text, const RunConfig& config);

/// Record corpora are extracted first; feature files pass through. Throws
/// Error(remote_provider) when extraction fails for any record.
std::string features_from_input(std::string_view text, const RunConfig& config);
void validate(const RunConfig& config);

std::string run_train(std::string_view features_text, const RunConfig& config);
std::string run_score(std::string_view model_text, std::string_view features_text, const RunConfig& config);
std::string run_evaluate(std::string_view features_text, const RunConfig& config);
std::string run_route(std::string_view model_text, std::string_view features_text, const RunConfig& config);
std::string run_ablate(std::string_view features_text, const RunConfig& config);
/// Each entry is (corpus name, feature file text).
std::string run_transfer(const std::vector<std::pair<std::string, std::string>>& corpora,
                         const RunConfig& config);
std::string run_synth(const RunConfig& config);

ModelFitOptions fit_options(const RunConfig& config);

}  // namespace traceconf
