#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "coxfuse/data_model.hpp"
#include "coxfuse/errors.hpp"
#include "coxfuse/kmeans.hpp"
#include "coxfuse/matrix.hpp"
#include "coxfuse/models.hpp"

namespace coxfuse::pipeline {

// Raised by cross_validate when not a single fold produced metrics.
struct AllFoldsFailed : DataError {
    AllFoldsFailed() : DataError("all folds failed") {}
};

struct PipelineConfig {
    std::size_t k_per_layer = 1000;
    std::size_t n_fingerprints = 128;
    std::size_t hidden = 512;
    std::size_t epochs = 256;
    double learning_rate = 0.01;
    double l2_lambda = 0.001;
    double dropout = 0.3;
    double noise_std = 0.2;
    double t0 = 10.0;
    double tb = 0.1;
    double select_alpha = 0.05;
    double cox_fallback_penalty = 0.1;
    KMeansConfig kmeans;
    std::size_t folds = 10;
    std::size_t repeats = 10;
    std::uint64_t master_seed = 0;
    bool selection_on_train_only = true;
};

// Strict: unknown or ill-typed keys raise ConfigError naming the key.
PipelineConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const PipelineConfig& cfg);
void validate_config(const PipelineConfig& cfg);

models::ModelConfig model_config(const PipelineConfig& cfg);

struct FoldSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

// Seeded shuffles partitioned into near-equal test blocks; identical
// output for identical arguments, so every model sees the same splits.
std::vector<std::vector<FoldSplit>> make_folds(std::size_t n, std::size_t folds,
                                               std::size_t repeats,
                                               std::uint64_t master_seed);

struct FoldResult {
    std::size_t repeat_index = 0;
    std::size_t fold_index = 0;
    double c_index = std::numeric_limits<double>::quiet_NaN();
    double logrank_p = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::size_t> selected_fingerprints;
    std::vector<std::size_t> cluster_labels;  // per test sample
    std::vector<std::size_t> test_indices;    // dataset rows of the test split
    int high_risk_cluster = -1;
    std::string failure;  // empty = success

    bool ok() const { return failure.empty(); }
};

// Train-side fitted state, exposed so tests can pin the no-leakage contract.
struct FoldArtifacts {
    std::vector<std::vector<std::size_t>> selection;  // per layer
    data::Scaler scaler;
    std::string model_json;
    Matrix centroids;
    std::vector<double> cox_beta;
};

// Steps A-F on one train/test split. Everything is fitted on train rows
// only; any step failure is captured in FoldResult::failure.
FoldResult run_fold(const data::MultiOmicsDataset& dataset,
                    const std::vector<std::size_t>& train_idx,
                    const std::vector<std::size_t>& test_idx,
                    models::ModelKind kind, const PipelineConfig& cfg,
                    std::uint64_t seed, FoldArtifacts* artifacts = nullptr);

struct CvReport {
    std::string model;
    std::string dataset;
    PipelineConfig config;
    std::vector<FoldResult> folds;  // ordered by (repeat, fold)
    double mean_c_index = std::numeric_limits<double>::quiet_NaN();
    double std_c_index = std::numeric_limits<double>::quiet_NaN();
    std::size_t n_success = 0;
};

// Repeated k-fold evaluation; per-fold seeds derive from the master seed.
// Folds run in parallel up to COXFUSE_WORKERS.
CvReport cross_validate(const data::MultiOmicsDataset& dataset,
                        models::ModelKind kind, const PipelineConfig& cfg,
                        const std::string& dataset_tag = "");

struct ModelComparison {
    struct DatasetMean {
        std::string dataset;
        std::string model;
        double mean_c_index = 0.0;
        std::size_t n_folds = 0;
    };
    struct RankRow {
        std::string model;
        double average_rank = 0.0;
    };
    struct PairTest {
        std::string model_a;
        std::string model_b;
        double t = 0.0;
        double p = 1.0;
        std::size_t n_a = 0;
        std::size_t n_b = 0;
    };
    std::vector<DatasetMean> dataset_means;
    std::vector<RankRow> ranks;  // best (lowest) average rank first
    std::vector<PairTest> tests;
};

// Per-dataset means, average ranks (ties averaged), and pairwise pooled
// t-tests on fold-level C-indices restricted to folds both models passed.
ModelComparison compare_models(const std::vector<CvReport>& reports);

struct StabilityReport {
    struct LayerCount {
        std::string layer;
        std::size_t width = 0;  // columns of this layer in the used matrix
        std::size_t count = 0;
        double normalized = 0.0;
    };
    struct FeatureCount {
        data::FeatureRef feature;
        std::size_t count = 0;  // number of runs the feature appeared in
    };
    std::vector<LayerCount> layer_counts;
    std::vector<FeatureCount> feature_counts;  // descending count
    std::size_t runs = 0;
    std::size_t fingerprints_per_run = 0;
};

// Refits the model `runs` times on the full normalized dataset with
// distinct derived seeds and tallies each fingerprint's top feature.
StabilityReport stability_analysis(const data::MultiOmicsDataset& dataset,
                                   models::ModelKind kind, std::size_t runs,
                                   const PipelineConfig& cfg);

}  // namespace coxfuse::pipeline
