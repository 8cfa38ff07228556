#include "traceconf/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "traceconf/error.hpp"
#include "traceconf/random.hpp"

namespace traceconf {

namespace {

void check_pairs(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw Error(ErrorCode::input, "scores and labels differ in length");
    for (double s : scores)
        if (!std::isfinite(s)) throw Error(ErrorCode::input, "non-finite score");
    for (int y : labels)
        if (y != 0 && y != 1) throw Error(ErrorCode::input, "labels must be 0 or 1");
}

std::pair<std::size_t, std::size_t> class_counts(std::span<const int> labels) {
    const auto pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
    return {pos, labels.size() - pos};
}

void require_both_classes(std::span<const int> labels) {
    const auto [pos, neg] = class_counts(labels);
    if (pos == 0 || neg == 0) throw Error(ErrorCode::degenerate_labels, "labels contain a single class");
}

std::vector<std::size_t> order_by_score(std::span<const double> scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    return order;
}

// Mann-Whitney U over tie groups; exact in half-integers.
double auroc_unchecked(std::span<const double> scores, std::span<const int> labels, std::vector<std::size_t>& order) {
    order.resize(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double u = 0.0;
    double negatives_below = 0.0;
    double pos_total = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        double p = 0.0;
        double q = 0.0;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            (labels[order[j]] == 1 ? p : q) += 1.0;
            ++j;
        }
        u += p * negatives_below + 0.5 * p * q;
        negatives_below += q;
        pos_total += p;
        i = j;
    }
    return u / (pos_total * negatives_below);
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
    const double h = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

double auroc(std::span<const double> scores, std::span<const int> labels) {
    check_pairs(scores, labels);
    require_both_classes(labels);
    std::vector<std::size_t> order;
    return auroc_unchecked(scores, labels, order);
}

ConfidenceInterval bootstrap_ci(std::span<const double> scores, std::span<const int> labels, std::size_t resamples,
                                double level, std::uint64_t seed) {
    check_pairs(scores, labels);
    require_both_classes(labels);
    if (resamples == 0) throw Error(ErrorCode::config, "bootstrap needs at least one resample");
    if (!(level > 0.0 && level < 1.0)) throw Error(ErrorCode::config, "confidence level must lie in (0, 1)");

    const auto n = scores.size();
    std::vector<double> values(resamples);
    std::vector<std::size_t> redraws(resamples, 0);

    auto run = [&](std::size_t begin, std::size_t end) {
        std::vector<double> s(n);
        std::vector<int> y(n);
        std::vector<std::size_t> order;
        for (std::size_t r = begin; r < end; ++r) {
            Rng rng(seed + r);
            for (;;) {
                std::size_t pos = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    const auto pick = static_cast<std::size_t>(uniform_index(rng, n));
                    s[i] = scores[pick];
                    y[i] = labels[pick];
                    pos += static_cast<std::size_t>(y[i]);
                }
                if (pos > 0 && pos < n) break;
                ++redraws[r];
            }
            values[r] = auroc_unchecked(s, y, order);
        }
    };

    const std::size_t workers = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, 16);
    if (workers == 1 || resamples < 64) {
        run(0, resamples);
    } else {
        std::vector<std::thread> threads;
        const auto chunk = (resamples + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            const auto begin = w * chunk;
            const auto end = std::min(resamples, begin + chunk);
            if (begin < end) threads.emplace_back(run, begin, end);
        }
        for (auto& t : threads) t.join();
    }

    std::sort(values.begin(), values.end());
    const double alpha = 1.0 - level;
    ConfidenceInterval ci;
    ci.lo = quantile_sorted(values, alpha / 2.0);
    ci.hi = quantile_sorted(values, 1.0 - alpha / 2.0);
    ci.redraws = std::accumulate(redraws.begin(), redraws.end(), std::size_t{0});
    return ci;
}

std::vector<ReliabilityBin> reliability_bins(std::span<const double> probs, std::span<const int> labels,
                                             std::size_t bins) {
    if (probs.size() != labels.size()) throw Error(ErrorCode::input, "probabilities and labels differ in length");
    if (bins == 0) throw Error(ErrorCode::config, "at least one bin is required");
    std::vector<double> conf(bins, 0.0);
    std::vector<double> hits(bins, 0.0);
    std::vector<std::size_t> counts(bins, 0);
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double p = probs[i];
        if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::input, "probabilities must lie in [0, 1]");
        if (labels[i] != 0 && labels[i] != 1) throw Error(ErrorCode::input, "labels must be 0 or 1");
        const auto b = std::min(static_cast<std::size_t>(p * static_cast<double>(bins)), bins - 1);
        conf[b] += p;
        hits[b] += labels[i];
        ++counts[b];
    }
    std::vector<ReliabilityBin> table(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        auto& row = table[b];
        row.bin_lo = static_cast<double>(b) / static_cast<double>(bins);
        row.bin_hi = static_cast<double>(b + 1) / static_cast<double>(bins);
        row.count = counts[b];
        if (counts[b] > 0) {
            row.mean_confidence = conf[b] / static_cast<double>(counts[b]);
            row.empirical_accuracy = hits[b] / static_cast<double>(counts[b]);
        }
    }
    return table;
}

double ece_from_bins(const std::vector<ReliabilityBin>& table) {
    std::size_t n = 0;
    for (const auto& row : table) n += row.count;
    if (n == 0) return 0.0;
    double total = 0.0;
    for (const auto& row : table) {
        if (row.count == 0) continue;
        total += static_cast<double>(row.count) / static_cast<double>(n) *
                 std::abs(*row.mean_confidence - *row.empirical_accuracy);
    }
    return total;
}

double ece(std::span<const double> probs, std::span<const int> labels, std::size_t bins) {
    return ece_from_bins(reliability_bins(probs, labels, bins));
}

double youden_threshold(std::span<const double> scores, std::span<const int> labels) {
    check_pairs(scores, labels);
    require_both_classes(labels);
    const auto [pos, neg] = class_counts(labels);
    const auto order = order_by_score(scores);

    // Ascending sweep: at a group's score, every record from the group upward
    // is predicted positive.
    long long tp = static_cast<long long>(pos);
    long long fp = static_cast<long long>(neg);
    const auto p = static_cast<long long>(pos);
    const auto q = static_cast<long long>(neg);
    long long best = std::numeric_limits<long long>::min();
    double threshold = scores[order.front()];
    std::size_t i = 0;
    while (i < order.size()) {
        const double t = scores[order[i]];
        const long long j_scaled = tp * q - fp * p;  // (TPR - FPR) * P * N
        if (j_scaled > best) {
            best = j_scaled;
            threshold = t;
        }
        while (i < order.size() && scores[order[i]] == t) {
            (labels[order[i]] == 1 ? tp : fp) -= 1;
            ++i;
        }
    }
    return threshold;
}

RoutingReport routing_report(std::span<const double> scores, std::span<const int> labels, double threshold) {
    check_pairs(scores, labels);
    if (!std::isfinite(threshold)) throw Error(ErrorCode::input, "routing threshold must be finite");
    RoutingReport r;
    r.threshold = threshold;
    r.n = scores.size();
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool flagged = scores[i] < threshold;
        const bool error = labels[i] == 0;
        if (error) ++r.total_errors;
        if (flagged) {
            ++r.flagged;
            (error ? r.flagged_errors : r.flagged_correct) += 1;
        } else if (!error) {
            ++r.unflagged_correct;
        }
    }
    r.flag_rate = r.n == 0 ? 0.0 : static_cast<double>(r.flagged) / static_cast<double>(r.n);
    if (r.total_errors > 0)
        r.error_catch_rate = static_cast<double>(r.flagged_errors) / static_cast<double>(r.total_errors);
    const auto unflagged = r.n - r.flagged;
    if (unflagged > 0) r.retained_accuracy = static_cast<double>(r.unflagged_correct) / static_cast<double>(unflagged);
    return r;
}

std::vector<RocPoint> roc_points(std::span<const double> scores, std::span<const int> labels) {
    check_pairs(scores, labels);
    require_both_classes(labels);
    const auto [pos, neg] = class_counts(labels);
    auto order = order_by_score(scores);
    std::reverse(order.begin(), order.end());
    std::vector<RocPoint> points;
    points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double t = scores[order[i]];
        while (i < order.size() && scores[order[i]] == t) {
            (labels[order[i]] == 1 ? tp : fp) += 1;
            ++i;
        }
        points.push_back({t, static_cast<double>(fp) / static_cast<double>(neg),
                          static_cast<double>(tp) / static_cast<double>(pos)});
    }
    return points;
}

// ---------------------------------------------------------------------------
// Pipeline-level evaluation

EvaluationReport evaluate_dataset(const Dataset& data, const EvaluationOptions& options) {
    EvaluationReport report;
    report.seed = options.fit.seed;
    report.n = data.size();
    report.positives = data.positives();
    report.feature_names = data.feature_names;
    report.cv = cv_fit_predict(data, options.folds, options.fit);

    const auto& calibrated = report.cv.calibrated;
    report.auroc = auroc(calibrated, data.labels);
    report.raw_auroc = auroc(report.cv.raw, data.labels);
    report.auroc_ci = bootstrap_ci(calibrated, data.labels, options.resamples, options.level, options.fit.seed);
    report.reliability_bins = reliability_bins(calibrated, data.labels, options.bins);
    report.ece = ece_from_bins(report.reliability_bins);
    report.raw_ece = ece(report.cv.raw, data.labels, options.bins);

    for (std::size_t f = 0; f < options.folds; ++f) {
        std::vector<double> s;
        std::vector<int> y;
        for (std::size_t i = 0; i < data.size(); ++i) {
            if (report.cv.fold_of[i] != f) continue;
            s.push_back(calibrated[i]);
            y.push_back(data.labels[i]);
        }
        report.per_fold_auroc.push_back(auroc(s, y));
    }
    report.routing = routing_report(calibrated, data.labels, youden_threshold(calibrated, data.labels));
    report.roc = roc_points(calibrated, data.labels);
    return report;
}

namespace {

nlohmann::ordered_json optional_number(const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

nlohmann::ordered_json to_json(const RoutingReport& r) {
    nlohmann::ordered_json doc;
    doc["threshold"] = r.threshold;
    doc["n"] = r.n;
    doc["flagged"] = r.flagged;
    doc["flagged_errors"] = r.flagged_errors;
    doc["flagged_correct"] = r.flagged_correct;
    doc["total_errors"] = r.total_errors;
    doc["unflagged_correct"] = r.unflagged_correct;
    doc["flag_rate"] = r.flag_rate;
    doc["error_catch_rate"] = optional_number(r.error_catch_rate);
    doc["retained_accuracy"] = optional_number(r.retained_accuracy);
    return doc;
}

nlohmann::ordered_json to_json(const ReliabilityBin& bin) {
    nlohmann::ordered_json doc;
    doc["bin_lo"] = bin.bin_lo;
    doc["bin_hi"] = bin.bin_hi;
    doc["mean_confidence"] = optional_number(bin.mean_confidence);
    doc["empirical_accuracy"] = optional_number(bin.empirical_accuracy);
    doc["count"] = bin.count;
    return doc;
}

nlohmann::ordered_json to_json(const EvaluationReport& report, const EvaluationOptions& options) {
    nlohmann::ordered_json doc;
    doc["n"] = report.n;
    doc["positives"] = report.positives;
    doc["seed"] = report.seed;
    doc["folds"] = options.folds;
    doc["feature_names"] = report.feature_names;
    doc["auroc"] = report.auroc;
    doc["auroc_ci"] = {{"lo", report.auroc_ci.lo},
                       {"hi", report.auroc_ci.hi},
                       {"level", options.level},
                       {"resamples", options.resamples},
                       {"single_class_redraws", report.auroc_ci.redraws}};
    doc["raw_auroc"] = report.raw_auroc;
    doc["ece"] = report.ece;
    doc["raw_ece"] = report.raw_ece;
    doc["bins"] = options.bins;
    doc["reliability_bins"] = nlohmann::ordered_json::array();
    for (const auto& b : report.reliability_bins) doc["reliability_bins"].push_back(to_json(b));
    doc["per_fold_auroc"] = report.per_fold_auroc;
    doc["routing"] = to_json(report.routing);
    doc["fold_models"] = nlohmann::ordered_json::array();
    for (const auto& m : report.cv.fold_models) doc["fold_models"].push_back(model_to_json(m));

    nlohmann::ordered_json roc = nlohmann::ordered_json::array();
    for (const auto& p : report.roc) {
        nlohmann::ordered_json point;
        point["threshold"] = std::isfinite(p.threshold) ? nlohmann::ordered_json(p.threshold) : nlohmann::ordered_json(nullptr);
        point["fpr"] = p.fpr;
        point["tpr"] = p.tpr;
        roc.push_back(std::move(point));
    }
    doc["plot_data"] = {{"reliability", doc["reliability_bins"]}, {"roc", std::move(roc)}};
    return doc;
}

// ---------------------------------------------------------------------------
// Ablation and transfer

std::vector<AblationRow> ablation_run(std::span<const FeatureRecord> corpus, const std::vector<FeatureMask>& masks,
                                      std::size_t k, const ModelFitOptions& options) {
    std::vector<AblationRow> rows;
    for (const auto& mask : masks) {
        if (mask.columns.empty()) throw Error(ErrorCode::config, "feature mask '" + mask.name + "' selects no features");
        const auto data = make_dataset(corpus, mask);
        const auto cv = cv_fit_predict(data, k, options);
        AblationRow row{mask, auroc(cv.calibrated, data.labels), {}};
        for (std::size_t f = 0; f < k; ++f) {
            std::vector<double> s;
            std::vector<int> y;
            for (std::size_t i = 0; i < data.size(); ++i) {
                if (cv.fold_of[i] != f) continue;
                s.push_back(cv.calibrated[i]);
                y.push_back(data.labels[i]);
            }
            row.per_fold_auroc.push_back(auroc(s, y));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

double transfer_eval(std::span<const FeatureRecord> train, std::span<const FeatureRecord> test,
                     const FeatureMask& mask, const ModelFitOptions& options) {
    const auto train_data = make_dataset(train, mask);
    const auto test_data = make_dataset(test, mask);
    const auto model = fit_confidence_model(train_data, options);
    std::vector<double> scores;
    scores.reserve(test_data.size());
    for (std::size_t i = 0; i < test_data.size(); ++i) scores.push_back(model.score(test_data.x.row(i)));
    return auroc(scores, test_data.labels);
}

double self_fit_eval(std::span<const FeatureRecord> corpus, const FeatureMask& mask, const ModelFitOptions& options) {
    const auto data = make_dataset(corpus, mask);
    std::vector<std::size_t> all(data.size());
    std::iota(all.begin(), all.end(), 0);
    const auto split = stratified_split(data, all, 0.2, options.seed);
    const auto model = fit_confidence_model(data, split.train, options);
    std::vector<double> scores;
    std::vector<int> labels;
    for (auto i : split.test) {
        scores.push_back(model.score(data.x.row(i)));
        labels.push_back(data.labels[i]);
    }
    return auroc(scores, labels);
}

}  // namespace traceconf
