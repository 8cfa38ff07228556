// Independent oracles and helpers shared by the test binaries. Nothing here
// calls the code under test except where noted.
#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace oracle {

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

inline std::string fixture(const std::string& name) { return read_file(std::string(TRACECONF_FIXTURES) + "/" + name); }

// O(n^2) pairwise AUROC: positive above negative counts 1, ties 1/2.
inline double pairwise_auroc(const std::vector<double>& s, const std::vector<int>& y) {
    double hits = 0.0;
    double pairs = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (y[i] != 1) continue;
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (y[j] != 0) continue;
            pairs += 1.0;
            if (s[i] > s[j]) hits += 1.0;
            else if (s[i] == s[j]) hits += 0.5;
        }
    }
    return hits / pairs;
}

// Exhaustive window scan with a sorted-multiset intersection per window.
inline double window_overlap(const std::vector<std::string>& span, const std::vector<std::string>& evidence) {
    if (span.empty() || evidence.empty()) return 0.0;
    const auto width = std::min(span.size(), evidence.size());
    auto sorted_span = span;
    std::sort(sorted_span.begin(), sorted_span.end());
    std::size_t best = 0;
    for (std::size_t start = 0; start + width <= evidence.size(); ++start) {
        std::vector<std::string> window(evidence.begin() + static_cast<long>(start),
                                        evidence.begin() + static_cast<long>(start + width));
        std::sort(window.begin(), window.end());
        std::vector<std::string> shared;
        std::set_intersection(sorted_span.begin(), sorted_span.end(), window.begin(), window.end(),
                              std::back_inserter(shared));
        best = std::max(best, shared.size());
    }
    return static_cast<double>(best) / static_cast<double>(span.size());
}

// Mean penalized logistic loss written out directly (no shared helpers).
inline double penalized_loss(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                             const std::vector<double>& w, double b, double lambda) {
    double total = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double z = b;
        for (std::size_t j = 0; j < w.size(); ++j) z += w[j] * x[i][j];
        const double log1pexp = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
        total += log1pexp - y[i] * z;
    }
    double norm = 0.0;
    for (double v : w) norm += v * v;
    return total / static_cast<double>(x.size()) + 0.5 * lambda * norm;
}

// Binormal scores: positives ~ N(d, 1), negatives ~ N(0, 1). AUROC = Phi(d / sqrt 2).
inline void binormal(std::mt19937_64& rng, std::size_t n, double positive_rate, double d, std::vector<double>& s,
                     std::vector<int>& y) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    s.clear();
    y.clear();
    for (std::size_t i = 0; i < n; ++i) {
        const int label = unit(rng) < positive_rate ? 1 : 0;
        y.push_back(label);
        s.push_back(normal(rng) + (label ? d : 0.0));
    }
}

}  // namespace oracle
