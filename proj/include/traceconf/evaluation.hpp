#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "traceconf/calibration.hpp"
#include "traceconf/dataset.hpp"

namespace traceconf {

/// Mann-Whitney AUROC with ties counted one half; label 1 is the positive class.
double auroc(std::span<const double> scores, std::span<const int> labels);

struct ConfidenceInterval {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t redraws = 0;  // single-class resamples that were redrawn
};

/// Percentile bootstrap of AUROC over (score, label) pairs. Resample r draws
/// from its own generator seeded with seed + r.
ConfidenceInterval bootstrap_ci(std::span<const double> scores, std::span<const int> labels,
                                std::size_t resamples = 2000, double level = 0.95,
                                std::uint64_t seed = 0);

struct ReliabilityBin {
    double bin_lo = 0.0;
    double bin_hi = 0.0;
    std::optional<double> mean_confidence;
    std::optional<double> empirical_accuracy;
    std::size_t count = 0;
};

/// Equal-width bins over [0,1]; probability 1 falls in the last bin.
std::vector<ReliabilityBin> reliability_bins(std::span<const double> probs, std::span<const int> labels,
                                             std::size_t bins = 10);
double ece_from_bins(const std::vector<ReliabilityBin>& table);
double ece(std::span<const double> probs, std::span<const int> labels, std::size_t bins = 10);

/// Smallest observed score maximising TPR - FPR with "score >= t" as positive.
double youden_threshold(std::span<const double> scores, std::span<const int> labels);

struct RoutingReport {
    double threshold = 0.0;
    std::size_t n = 0;
    std::size_t flagged = 0;
    std::size_t flagged_errors = 0;
    std::size_t flagged_correct = 0;
    std::size_t total_errors = 0;
    std::size_t unflagged_correct = 0;
    double flag_rate = 0.0;
    std::optional<double> error_catch_rate;
    std::optional<double> retained_accuracy;
};

/// Records with score < threshold are flagged for review.
RoutingReport routing_report(std::span<const double> scores, std::span<const int> labels, double threshold);

struct RocPoint {
    double threshold;
    double fpr;
    double tpr;
};
std::vector<RocPoint> roc_points(std::span<const double> scores, std::span<const int> labels);

struct EvaluationOptions {
    std::size_t folds = 5;
    std::size_t resamples = 2000;
    double level = 0.95;
    std::size_t bins = 10;
    ModelFitOptions fit;
};

struct EvaluationReport {
    double auroc = 0.0;
    ConfidenceInterval auroc_ci;
    double raw_auroc = 0.0;
    double ece = 0.0;
    double raw_ece = 0.0;
    std::vector<ReliabilityBin> reliability_bins;
    std::vector<double> per_fold_auroc;
    std::uint64_t seed = 0;
    std::size_t n = 0;
    std::size_t positives = 0;
    RoutingReport routing;  // at the Youden threshold of the pooled scores
    std::vector<RocPoint> roc;
    std::vector<std::string> feature_names;
    CvResult cv;
};

EvaluationReport evaluate_dataset(const Dataset& data, const EvaluationOptions& options);

nlohmann::ordered_json to_json(const RoutingReport& report);
nlohmann::ordered_json to_json(const ReliabilityBin& bin);
nlohmann::ordered_json to_json(const EvaluationReport& report, const EvaluationOptions& options);

struct AblationRow {
    FeatureMask mask;
    double auroc = 0.0;
    std::vector<double> per_fold_auroc;
};

/// CV AUROC per feature subset. Throws Error(config) on an empty mask.
std::vector<AblationRow> ablation_run(std::span<const FeatureRecord> corpus,
                                      const std::vector<FeatureMask>& masks, std::size_t k,
                                      const ModelFitOptions& options);

/// Fit on all of `train`, score `test`, AUROC.
double transfer_eval(std::span<const FeatureRecord> train, std::span<const FeatureRecord> test,
                     const FeatureMask& mask, const ModelFitOptions& options);
/// Single seeded stratified 80/20 split within one corpus.
double self_fit_eval(std::span<const FeatureRecord> corpus, const FeatureMask& mask,
                     const ModelFitOptions& options);

}  // namespace traceconf
