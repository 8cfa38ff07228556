#include "traceconf/dataset.hpp"

#include <algorithm>
#include <unordered_set>

#include "traceconf/error.hpp"
#include "traceconf/text.hpp"

namespace traceconf {

std::vector<std::string> FeatureMask::feature_names() const {
    std::vector<std::string> names;
    names.reserve(columns.size());
    for (auto c : columns) names.emplace_back(kFeatureNames[c]);
    return names;
}

FeatureMask all_features_mask() { return {"all", {0, 1, 2, 3, 4, 5, 6}}; }

std::vector<FeatureMask> default_ablation_masks() {
    return {
        all_features_mask(),
        {"sva_only", {0}},
        {"surface_only", {3, 4, 5, 6}},
        {"structural", {0, 1, 2}},
        {"sva_plus_surface", {0, 3, 4, 5, 6}},
    };
}

FeatureMask parse_mask(std::string_view spec) {
    const auto name = std::string(trim(spec));
    if (name.empty()) throw Error(ErrorCode::config, "empty feature mask");
    for (auto& m : default_ablation_masks())
        if (m.name == name) return m;

    // Custom subset: feature names joined by '+'.
    FeatureMask mask{name, {}};
    std::size_t begin = 0;
    while (begin <= name.size()) {
        auto end = name.find('+', begin);
        if (end == std::string::npos) end = name.size();
        const auto part = std::string(trim(std::string_view(name).substr(begin, end - begin)));
        const auto it = std::find(kFeatureNames.begin(), kFeatureNames.end(), part);
        if (it == kFeatureNames.end())
            throw Error(ErrorCode::config, "unknown feature or subset '" + part + "' in mask '" + name + "'");
        mask.columns.push_back(static_cast<std::size_t>(it - kFeatureNames.begin()));
        begin = end + 1;
    }
    std::sort(mask.columns.begin(), mask.columns.end());
    mask.columns.erase(std::unique(mask.columns.begin(), mask.columns.end()), mask.columns.end());
    return mask;
}

std::size_t Dataset::positives() const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
}

Dataset make_dataset(std::span<const FeatureRecord> records, const FeatureMask& mask) {
    if (mask.columns.empty()) throw Error(ErrorCode::config, "feature mask '" + mask.name + "' selects no features");
    Dataset data;
    data.feature_names = mask.feature_names();
    data.x = Matrix(records.size(), mask.columns.size());
    data.ids.reserve(records.size());
    data.labels.reserve(records.size());
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (!r.label)
            throw Error(ErrorCode::input, "record '" + r.id + "' has no value in the required column 'label'");
        if (!seen.insert(r.id).second) throw Error(ErrorCode::schema, "duplicate record id '" + r.id + "'");
        const auto values = r.features.to_array();
        for (std::size_t c = 0; c < mask.columns.size(); ++c) data.x(i, c) = values[mask.columns[c]];
        data.ids.push_back(r.id);
        data.labels.push_back(*r.label);
    }
    return data;
}

}  // namespace traceconf
