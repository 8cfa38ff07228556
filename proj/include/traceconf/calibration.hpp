#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "traceconf/dataset.hpp"
#include "traceconf/matrix.hpp"

namespace traceconf {

double sigmoid(double z);
double softplus(double z);

struct Standardizer {
    std::vector<double> means;
    std::vector<double> stds;
    std::vector<bool> zero_variance;

    Matrix transform(const Matrix& x) const;
    std::vector<double> transform(std::span<const double> row) const;
};

/// Per-column mean and population standard deviation. Zero-variance columns
/// get std 1 (centering only). Throws Error(insufficient_data) below 2 rows.
Standardizer fit_standardizer(const Matrix& x);

struct LrModel {
    std::vector<double> weights;
    double bias = 0.0;
    double lambda = 0.1;
    bool converged = false;
    int iterations = 0;

    double linear(std::span<const double> standardized_row) const;
};

struct LrFitOptions {
    double lambda = 0.1;
    double tol = 1e-8;
    int max_iter = 10000;
    // Starting point; zeros when absent. Must match the column count.
    std::optional<std::vector<double>> initial_weights;
    double initial_bias = 0.0;
    // When set, receives the objective after every accepted step (first entry
    // is the starting objective).
    std::vector<double>* objective_trace = nullptr;
};

/// Penalized mean negative log-likelihood: mean(softplus(z) - t z) + lambda/2 |w|^2.
double lr_objective(const LrModel& model, const Matrix& x, std::span<const double> targets);

/// Analytic gradient of lr_objective; weights first, bias last.
std::vector<double> lr_gradient(const LrModel& model, const Matrix& x, std::span<const double> targets);
std::vector<double> lr_gradient(const LrModel& model, const Matrix& x, std::span<const int> labels);

/// Full-batch gradient descent with Armijo backtracking on soft targets in
/// [0,1]; lambda may be 0 here. No label validation.
LrModel lr_minimize(const Matrix& x, std::span<const double> targets, const LrFitOptions& options);

/// Validated entry point: both classes present, lambda > 0, finite features.
LrModel lr_fit(const Matrix& x, std::span<const int> labels, const LrFitOptions& options = {});

struct PlattParams {
    double a = 1.0;
    double b = 0.0;
    bool monotone_increasing = true;

    double apply(double raw_score) const;
};

PlattParams platt_fit(std::span<const double> raw_scores, std::span<const int> labels);

struct Provenance {
    std::string dataset_tag;
    std::uint64_t seed = 0;
    std::string timestamp;
};

struct ConfidenceModel {
    Standardizer standardizer;
    LrModel lr;
    PlattParams platt;
    std::vector<std::string> feature_names;
    Provenance provenance;
    bool fitted = false;

    /// sigmoid(w . standardize(x) + b), before calibration.
    double raw_score(std::span<const double> row) const;
    /// Calibrated confidence that the verdict is correct; strictly inside (0,1).
    double score(std::span<const double> row) const;
};

/// Score a full 7-feature vector, projecting onto the model's feature subset.
double lr_score(const ConfidenceModel& model, const FeatureVector& features);

nlohmann::ordered_json model_to_json(const ConfidenceModel& model);
/// Checks that feature_names follow the canonical order. Throws Error(schema).
ConfidenceModel model_from_json(const nlohmann::json& doc);

struct ModelFitOptions {
    LrFitOptions lr;
    std::uint64_t seed = 42;
    std::string dataset_tag;
    std::string timestamp;
};

/// Standardizer + LR on `train`; Platt on held-out scores of an auxiliary fit
/// over a stratified inner 80/20 split of `train`.
ConfidenceModel fit_confidence_model(const Dataset& data, std::span<const std::size_t> train,
                                     const ModelFitOptions& options);
ConfidenceModel fit_confidence_model(const Dataset& data, const ModelFitOptions& options);

/// Stratified split of `indices` (ordered by id) holding out `fraction` of
/// each class. Throws Error(stratification) when a class has < 2 members.
struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};
Split stratified_split(const Dataset& data, std::span<const std::size_t> indices, double fraction,
                       std::uint64_t seed);

/// Fold index per record: ids sorted, each class shuffled with `seed`, dealt
/// round-robin (negatives continue where positives stopped).
std::vector<std::size_t> stratified_folds(const Dataset& data, std::size_t k, std::uint64_t seed);

struct CvResult {
    std::vector<ConfidenceModel> fold_models;
    std::vector<std::size_t> fold_of;
    std::vector<double> calibrated;  // out-of-fold, one per record
    std::vector<double> raw;
};

CvResult cv_fit_predict(const Dataset& data, std::size_t k, const ModelFitOptions& options);

}  // namespace traceconf
