#include "traceconf/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>

#include "traceconf/error.hpp"
#include "traceconf/random.hpp"

namespace traceconf {

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

// ---------------------------------------------------------------------------
// Standardizer

Standardizer fit_standardizer(const Matrix& x) {
    if (x.rows() < 2) throw Error(ErrorCode::insufficient_data, "standardization needs at least 2 rows");
    const auto n = static_cast<double>(x.rows());
    Standardizer s;
    s.means.assign(x.cols(), 0.0);
    s.stds.assign(x.cols(), 1.0);
    s.zero_variance.assign(x.cols(), false);
    for (std::size_t c = 0; c < x.cols(); ++c) {
        double sum = 0.0;
        for (std::size_t r = 0; r < x.rows(); ++r) sum += x(r, c);
        const double mean = sum / n;
        double ss = 0.0;
        for (std::size_t r = 0; r < x.rows(); ++r) ss += (x(r, c) - mean) * (x(r, c) - mean);
        const double sd = std::sqrt(ss / n);
        s.means[c] = mean;
        if (sd <= 1e-12 * std::max(1.0, std::abs(mean))) {
            s.zero_variance[c] = true;
        } else {
            s.stds[c] = sd;
        }
    }
    return s;
}

Matrix Standardizer::transform(const Matrix& x) const {
    Matrix out(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) = (x(r, c) - means[c]) / stds[c];
    return out;
}

std::vector<double> Standardizer::transform(std::span<const double> row) const {
    std::vector<double> out(row.size());
    for (std::size_t c = 0; c < row.size(); ++c) out[c] = (row[c] - means[c]) / stds[c];
    return out;
}

// ---------------------------------------------------------------------------
// Logistic regression

double LrModel::linear(std::span<const double> row) const {
    double z = bias;
    for (std::size_t c = 0; c < weights.size(); ++c) z += weights[c] * row[c];
    return z;
}

namespace {

void check_shapes(const LrModel& model, const Matrix& x, std::size_t targets) {
    if (x.rows() != targets) throw Error(ErrorCode::input, "feature rows and labels differ in length");
    if (model.weights.size() != x.cols()) throw Error(ErrorCode::input, "weight count does not match feature columns");
}

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double e : v) m = std::max(m, std::abs(e));
    return m;
}

// softplus(z + dz) - softplus(z), accurate when dz is small.
double softplus_delta(double z, double dz) {
    if (std::abs(dz) < 1.0) return std::log1p(sigmoid(z) * std::expm1(dz));
    return softplus(z + dz) - softplus(z);
}

}  // namespace

double lr_objective(const LrModel& model, const Matrix& x, std::span<const double> targets) {
    check_shapes(model, x, targets.size());
    double loss = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const double z = model.linear(x.row(r));
        loss += softplus(z) - targets[r] * z;
    }
    double penalty = 0.0;
    for (double w : model.weights) penalty += w * w;
    return loss / static_cast<double>(x.rows()) + 0.5 * model.lambda * penalty;
}

std::vector<double> lr_gradient(const LrModel& model, const Matrix& x, std::span<const double> targets) {
    check_shapes(model, x, targets.size());
    const auto d = x.cols();
    std::vector<double> g(d + 1, 0.0);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const auto row = x.row(r);
        const double residual = sigmoid(model.linear(row)) - targets[r];
        for (std::size_t c = 0; c < d; ++c) g[c] += residual * row[c];
        g[d] += residual;
    }
    const auto n = static_cast<double>(x.rows());
    for (std::size_t c = 0; c < d; ++c) g[c] = g[c] / n + model.lambda * model.weights[c];
    g[d] /= n;
    return g;
}

std::vector<double> lr_gradient(const LrModel& model, const Matrix& x, std::span<const int> labels) {
    std::vector<double> targets(labels.begin(), labels.end());
    return lr_gradient(model, x, targets);
}

LrModel lr_minimize(const Matrix& x, std::span<const double> targets, const LrFitOptions& options) {
    const auto n = x.rows();
    const auto d = x.cols();
    LrModel model;
    model.lambda = options.lambda;
    model.weights = options.initial_weights.value_or(std::vector<double>(d, 0.0));
    model.bias = options.initial_bias;
    check_shapes(model, x, targets.size());
    if (n == 0) throw Error(ErrorCode::insufficient_data, "cannot fit on zero rows");

    constexpr double kArmijo = 1e-4;
    std::vector<double> z(n);
    for (std::size_t r = 0; r < n; ++r) z[r] = model.linear(x.row(r));
    double objective = lr_objective(model, x, targets);
    if (options.objective_trace) options.objective_trace->assign(1, objective);

    auto gradient = lr_gradient(model, x, targets);
    std::vector<double> dz(n);
    double step = 1.0;
    for (int it = 0; it < options.max_iter; ++it) {
        if (max_abs(gradient) < options.tol) {
            model.converged = true;
            break;
        }
        double grad_sq = 0.0;
        for (double gi : gradient) grad_sq += gi * gi;

        // Backtracking on the exact objective change, computed row by row so
        // the sufficient-decrease test stays meaningful near the optimum.
        step = std::min(step * 2.0, 1e6);
        double delta = 0.0;
        bool accepted = false;
        while (step > 1e-30) {
            for (std::size_t r = 0; r < n; ++r) {
                const auto row = x.row(r);
                double dot = gradient[d];
                for (std::size_t c = 0; c < d; ++c) dot += gradient[c] * row[c];
                dz[r] = -step * dot;
            }
            double loss_delta = 0.0;
            for (std::size_t r = 0; r < n; ++r) loss_delta += softplus_delta(z[r], dz[r]) - targets[r] * dz[r];
            double penalty_delta = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                const double w_new = model.weights[c] - step * gradient[c];
                penalty_delta += (w_new - model.weights[c]) * (w_new + model.weights[c]);
            }
            delta = loss_delta / static_cast<double>(n) + 0.5 * model.lambda * penalty_delta;
            if (std::isfinite(delta) && delta <= -kArmijo * step * grad_sq) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;

        for (std::size_t c = 0; c < d; ++c) model.weights[c] -= step * gradient[c];
        model.bias -= step * gradient[d];
        for (std::size_t r = 0; r < n; ++r) z[r] = model.linear(x.row(r));
        objective += delta;
        if (options.objective_trace) options.objective_trace->push_back(objective);
        gradient = lr_gradient(model, x, targets);
        model.iterations = it + 1;
    }
    if (!model.converged && max_abs(gradient) < options.tol) model.converged = true;
    return model;
}

namespace {

void require_binary_labels(std::span<const int> labels) {
    bool pos = false;
    bool neg = false;
    for (int y : labels) {
        if (y == 1) pos = true;
        else if (y == 0) neg = true;
        else throw Error(ErrorCode::input, "labels must be 0 or 1");
    }
    if (!pos || !neg) throw Error(ErrorCode::degenerate_labels, "labels contain a single class");
}

}  // namespace

LrModel lr_fit(const Matrix& x, std::span<const int> labels, const LrFitOptions& options) {
    if (x.rows() != labels.size()) throw Error(ErrorCode::input, "feature rows and labels differ in length");
    if (!(options.lambda > 0.0) || !std::isfinite(options.lambda))
        throw Error(ErrorCode::config, "lambda must be a positive finite number");
    require_binary_labels(labels);
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (double v : x.row(r))
            if (!std::isfinite(v)) throw Error(ErrorCode::input, "non-finite feature value in row " + std::to_string(r));
    std::vector<double> targets(labels.begin(), labels.end());
    return lr_minimize(x, targets, options);
}

// ---------------------------------------------------------------------------
// Platt scaling

double PlattParams::apply(double raw_score) const { return sigmoid(a * raw_score + b); }

PlattParams platt_fit(std::span<const double> raw_scores, std::span<const int> labels) {
    if (raw_scores.size() != labels.size()) throw Error(ErrorCode::input, "scores and labels differ in length");
    require_binary_labels(labels);
    const auto n = raw_scores.size();
    const double positives = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
    const double negatives = static_cast<double>(n) - positives;
    const double hi = (positives + 1.0) / (positives + 2.0);
    const double lo = 1.0 / (negatives + 2.0);

    double mean = 0.0;
    for (double s : raw_scores) mean += s;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double s : raw_scores) ss += (s - mean) * (s - mean);
    double sd = std::sqrt(ss / static_cast<double>(n));
    const bool constant = !(sd > 1e-12 * std::max(1.0, std::abs(mean)));
    if (constant) sd = 1.0;

    // Fit on the standardized score, then map back: a = w / sd, b = c - w mean / sd.
    Matrix x(n, 1);
    std::vector<double> targets(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(raw_scores[i])) throw Error(ErrorCode::input, "non-finite raw score");
        x(i, 0) = constant ? 0.0 : (raw_scores[i] - mean) / sd;
        targets[i] = labels[i] == 1 ? hi : lo;
    }
    LrFitOptions options;
    options.lambda = 0.0;
    const auto fit = lr_minimize(x, targets, options);

    PlattParams params;
    params.a = constant ? 0.0 : fit.weights[0] / sd;
    params.b = constant ? fit.bias : fit.bias - fit.weights[0] * mean / sd;
    params.monotone_increasing = params.a > 0.0;
    return params;
}

// ---------------------------------------------------------------------------
// Confidence model

double ConfidenceModel::raw_score(std::span<const double> row) const {
    if (!fitted) throw Error(ErrorCode::state, "confidence model is not fitted");
    if (row.size() != lr.weights.size()) throw Error(ErrorCode::input, "feature row does not match the model's features");
    return sigmoid(lr.linear(standardizer.transform(row)));
}

double ConfidenceModel::score(std::span<const double> row) const {
    constexpr double lowest = std::numeric_limits<double>::min();
    constexpr double highest = 1.0 - 0x1.0p-53;
    return std::clamp(platt.apply(raw_score(row)), lowest, highest);
}

double lr_score(const ConfidenceModel& model, const FeatureVector& features) {
    if (!model.fitted) throw Error(ErrorCode::state, "confidence model is not fitted");
    const auto all = features.to_array();
    std::vector<double> row;
    row.reserve(model.feature_names.size());
    for (const auto& name : model.feature_names) {
        const auto it = std::find(kFeatureNames.begin(), kFeatureNames.end(), name);
        if (it == kFeatureNames.end()) throw Error(ErrorCode::schema, "unknown feature '" + name + "'");
        row.push_back(all[static_cast<std::size_t>(it - kFeatureNames.begin())]);
    }
    return model.score(row);
}

nlohmann::ordered_json model_to_json(const ConfidenceModel& model) {
    nlohmann::ordered_json doc;
    doc["feature_names"] = model.feature_names;
    doc["standardizer"] = {{"means", model.standardizer.means},
                           {"stds", model.standardizer.stds},
                           {"zero_variance", model.standardizer.zero_variance}};
    doc["lr"] = {{"weights", model.lr.weights},
                 {"bias", model.lr.bias},
                 {"lambda", model.lr.lambda},
                 {"converged", model.lr.converged},
                 {"iterations", model.lr.iterations}};
    doc["platt"] = {{"a", model.platt.a}, {"b", model.platt.b}, {"monotone_increasing", model.platt.monotone_increasing}};
    doc["provenance"] = {{"dataset_tag", model.provenance.dataset_tag},
                         {"seed", model.provenance.seed},
                         {"timestamp", model.provenance.timestamp}};
    return doc;
}

ConfidenceModel model_from_json(const nlohmann::json& doc) {
    ConfidenceModel model;
    try {
        model.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
        const auto& st = doc.at("standardizer");
        model.standardizer.means = st.at("means").get<std::vector<double>>();
        model.standardizer.stds = st.at("stds").get<std::vector<double>>();
        model.standardizer.zero_variance =
            st.contains("zero_variance") ? st.at("zero_variance").get<std::vector<bool>>()
                                         : std::vector<bool>(model.standardizer.means.size(), false);
        const auto& lr = doc.at("lr");
        model.lr.weights = lr.at("weights").get<std::vector<double>>();
        model.lr.bias = lr.at("bias").get<double>();
        model.lr.lambda = lr.at("lambda").get<double>();
        model.lr.converged = lr.value("converged", true);
        model.lr.iterations = lr.value("iterations", 0);
        const auto& platt = doc.at("platt");
        model.platt.a = platt.at("a").get<double>();
        model.platt.b = platt.at("b").get<double>();
        model.platt.monotone_increasing = model.platt.a > 0.0;
        if (const auto it = doc.find("provenance"); it != doc.end()) {
            model.provenance.dataset_tag = it->value("dataset_tag", "");
            model.provenance.seed = it->value("seed", std::uint64_t{0});
            model.provenance.timestamp = it->value("timestamp", "");
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::schema, std::string("malformed model file: ") + e.what());
    }

    const auto d = model.feature_names.size();
    if (d == 0) throw Error(ErrorCode::schema, "model lists no features");
    std::size_t previous = 0;
    for (std::size_t i = 0; i < d; ++i) {
        const auto it = std::find(kFeatureNames.begin(), kFeatureNames.end(), model.feature_names[i]);
        if (it == kFeatureNames.end())
            throw Error(ErrorCode::schema, "model lists unknown feature '" + model.feature_names[i] + "'");
        const auto pos = static_cast<std::size_t>(it - kFeatureNames.begin());
        if (i > 0 && pos <= previous)
            throw Error(ErrorCode::schema, "model feature_names are not in the canonical order");
        previous = pos;
    }
    if (model.standardizer.means.size() != d || model.standardizer.stds.size() != d || model.lr.weights.size() != d ||
        model.standardizer.zero_variance.size() != d)
        throw Error(ErrorCode::schema, "model arrays do not match feature_names");
    auto finite = [](double v) { return std::isfinite(v); };
    if (!std::all_of(model.lr.weights.begin(), model.lr.weights.end(), finite) || !finite(model.lr.bias) ||
        !finite(model.platt.a) || !finite(model.platt.b) ||
        !std::all_of(model.standardizer.means.begin(), model.standardizer.means.end(), finite) ||
        !std::all_of(model.standardizer.stds.begin(), model.standardizer.stds.end(), [](double s) { return std::isfinite(s) && s > 0.0; }))
        throw Error(ErrorCode::schema, "model holds non-finite parameters");
    model.fitted = true;
    return model;
}

// ---------------------------------------------------------------------------
// Splits and cross-validation

namespace {

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> by_class_sorted(const Dataset& data,
                                                                            std::span<const std::size_t> indices) {
    std::vector<std::size_t> pos;
    std::vector<std::size_t> neg;
    for (auto i : indices) (data.labels[i] == 1 ? pos : neg).push_back(i);
    auto by_id = [&](std::size_t a, std::size_t b) { return data.ids[a] < data.ids[b]; };
    std::sort(pos.begin(), pos.end(), by_id);
    std::sort(neg.begin(), neg.end(), by_id);
    return {std::move(pos), std::move(neg)};
}

std::pair<Matrix, std::vector<int>> take(const Dataset& data, std::span<const std::size_t> indices) {
    std::vector<int> y;
    y.reserve(indices.size());
    for (auto i : indices) y.push_back(data.labels[i]);
    return {data.x.select_rows(indices), std::move(y)};
}

}  // namespace

Split stratified_split(const Dataset& data, std::span<const std::size_t> indices, double fraction, std::uint64_t seed) {
    auto [pos, neg] = by_class_sorted(data, indices);
    if (pos.size() < 2 || neg.size() < 2)
        throw Error(ErrorCode::stratification, "a stratified split needs at least 2 records of each class");
    Rng rng(seed);
    shuffle(pos, rng);
    shuffle(neg, rng);
    Split split;
    for (auto* cls : {&pos, &neg}) {
        const auto count = cls->size();
        auto held = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(count)));
        held = std::clamp<std::size_t>(held, 1, count - 1);
        split.test.insert(split.test.end(), cls->begin(), cls->begin() + static_cast<std::ptrdiff_t>(held));
        split.train.insert(split.train.end(), cls->begin() + static_cast<std::ptrdiff_t>(held), cls->end());
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

std::vector<std::size_t> stratified_folds(const Dataset& data, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw Error(ErrorCode::config, "cross-validation needs at least 2 folds");
    std::vector<std::size_t> all(data.size());
    std::iota(all.begin(), all.end(), 0);
    auto [pos, neg] = by_class_sorted(data, all);
    if (pos.size() < k || neg.size() < k)
        throw Error(ErrorCode::stratification, "stratified " + std::to_string(k) + "-fold split needs at least " +
                                                   std::to_string(k) + " records per class (have " +
                                                   std::to_string(pos.size()) + " positive, " +
                                                   std::to_string(neg.size()) + " negative)");
    Rng rng(seed);
    shuffle(pos, rng);
    shuffle(neg, rng);
    std::vector<std::size_t> fold_of(data.size());
    for (std::size_t i = 0; i < pos.size(); ++i) fold_of[pos[i]] = i % k;
    for (std::size_t j = 0; j < neg.size(); ++j) fold_of[neg[j]] = (pos.size() + j) % k;
    return fold_of;
}

ConfidenceModel fit_confidence_model(const Dataset& data, std::span<const std::size_t> train,
                                     const ModelFitOptions& options) {
    ConfidenceModel model;
    model.feature_names = data.feature_names;
    model.provenance = {options.dataset_tag, options.seed, options.timestamp};

    const auto [x, y] = take(data, train);
    model.standardizer = fit_standardizer(x);
    model.lr = lr_fit(model.standardizer.transform(x), y, options.lr);

    // Calibration data must be held out from the model that produced it.
    const auto inner = stratified_split(data, train, 0.2, derive_seed(options.seed, 0x706c617474ull));
    const auto [xi, yi] = take(data, inner.train);
    ConfidenceModel aux;
    aux.standardizer = fit_standardizer(xi);
    aux.lr = lr_fit(aux.standardizer.transform(xi), yi, options.lr);
    aux.fitted = true;
    std::vector<double> held_scores;
    std::vector<int> held_labels;
    for (auto i : inner.test) {
        held_scores.push_back(aux.raw_score(data.x.row(i)));
        held_labels.push_back(data.labels[i]);
    }
    model.platt = platt_fit(held_scores, held_labels);
    model.fitted = true;
    return model;
}

ConfidenceModel fit_confidence_model(const Dataset& data, const ModelFitOptions& options) {
    std::vector<std::size_t> all(data.size());
    std::iota(all.begin(), all.end(), 0);
    return fit_confidence_model(data, all, options);
}

CvResult cv_fit_predict(const Dataset& data, std::size_t k, const ModelFitOptions& options) {
    CvResult result;
    result.fold_of = stratified_folds(data, k, options.seed);
    result.calibrated.assign(data.size(), 0.0);
    result.raw.assign(data.size(), 0.0);

    std::vector<std::future<ConfidenceModel>> pending;
    for (std::size_t f = 0; f < k; ++f) {
        pending.push_back(std::async(std::launch::async, [&, f] {
            std::vector<std::size_t> train;
            for (std::size_t i = 0; i < data.size(); ++i)
                if (result.fold_of[i] != f) train.push_back(i);
            auto fold_options = options;
            fold_options.seed = derive_seed(options.seed, f + 1);
            auto model = fit_confidence_model(data, train, fold_options);
            model.provenance.seed = options.seed;
            return model;
        }));
    }
    for (auto& p : pending) result.fold_models.push_back(p.get());

    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& model = result.fold_models[result.fold_of[i]];
        result.raw[i] = model.raw_score(data.x.row(i));
        result.calibrated[i] = model.score(data.x.row(i));
    }
    return result;
}

}  // namespace traceconf
