#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "coxfuse/matrix.hpp"

namespace coxfuse::data {

struct OmicsLayer {
    std::string name;
    std::vector<std::string> feature_names;
    Matrix values;  // n_samples x n_features

    std::size_t n_features() const { return feature_names.size(); }
};

struct SurvivalLabels {
    std::vector<double> time;          // days, >= 0
    std::vector<std::uint8_t> event;   // 1 = event observed, 0 = censored

    std::size_t size() const { return time.size(); }
    std::size_t n_events() const;
};

struct MultiOmicsDataset {
    std::vector<std::string> sample_ids;
    std::vector<OmicsLayer> layers;
    SurvivalLabels survival;

    std::size_t n_samples() const { return sample_ids.size(); }
};

struct FeatureRef {
    std::string layer_name;
    std::string feature_name;
    std::size_t global_index = 0;

    bool operator==(const FeatureRef&) const = default;
};

struct Scaler {
    std::vector<double> mean;
    std::vector<double> std_dev;  // clamped to 1 for degenerate columns

    bool operator==(const Scaler&) const = default;
};

// Loads one <layer>.tsv per omics layer plus survival.tsv from a directory.
// Layers are sorted by name and aligned on the sorted intersection of
// sample ids across all files.
MultiOmicsDataset load_dataset(const std::filesystem::path& root);

// Indices of the min(k, n_features) highest-variance columns, ascending.
// Population variance; equal variances break toward the lower index.
std::vector<std::size_t> variance_topk(const OmicsLayer& layer, std::size_t k);
// Same, but variance computed over the given rows only.
std::vector<std::size_t> variance_topk(const OmicsLayer& layer, std::size_t k,
                                       std::span<const std::size_t> rows);

// Concatenates the selected columns layer by layer into one n x D matrix,
// with a FeatureRef per output column.
std::pair<Matrix, std::vector<FeatureRef>> concat_selected(
    const MultiOmicsDataset& dataset,
    const std::vector<std::vector<std::size_t>>& per_layer_indices);

Matrix take_rows(const Matrix& m, std::span<const std::size_t> rows);
Matrix take_cols(const Matrix& m, std::span<const std::size_t> cols);
SurvivalLabels take_rows(const SurvivalLabels& labels,
                         std::span<const std::size_t> rows);

Scaler zscore_fit(const Matrix& train);
Matrix zscore_apply(const Scaler& scaler, const Matrix& x);

}  // namespace coxfuse::data
