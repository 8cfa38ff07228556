#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "traceconf/matrix.hpp"
#include "traceconf/signals.hpp"

namespace traceconf {

/// One line of a feature file.
struct FeatureRecord {
    std::string id;
    FeatureVector features;
    Verdict verdict = Verdict::pass;
    std::optional<int> label;
    std::string dataset_tag;
};

/// Column subset of the canonical feature order.
struct FeatureMask {
    std::string name;
    std::vector<std::size_t> columns;

    std::vector<std::string> feature_names() const;
};

FeatureMask all_features_mask();
/// Named subsets (all, sva_only, surface_only, structural, sva_plus_surface)
/// or feature names joined by '+'. Throws Error(config).
FeatureMask parse_mask(std::string_view spec);
std::vector<FeatureMask> default_ablation_masks();

/// Labelled design matrix for fitting and evaluation.
struct Dataset {
    std::vector<std::string> ids;
    Matrix x;
    std::vector<int> labels;
    std::vector<std::string> feature_names;

    std::size_t size() const { return labels.size(); }
    std::size_t positives() const;
};

/// Every record must carry a label; throws Error(input) naming the column
/// otherwise, and Error(schema) on duplicate ids.
Dataset make_dataset(std::span<const FeatureRecord> records, const FeatureMask& mask);

}  // namespace traceconf
