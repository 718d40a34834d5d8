#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "coxfuse/concrete.hpp"
#include "coxfuse/data_model.hpp"
#include "coxfuse/matrix.hpp"

namespace coxfuse::models {

enum class ModelKind { pca, ae, sae, csae };

std::string to_string(ModelKind kind);
ModelKind kind_from_string(const std::string& name);

struct ModelConfig {
    std::size_t n_fingerprints = 128;
    std::size_t hidden = 512;
    std::size_t epochs = 256;
    double learning_rate = 0.01;
    double l2_lambda = 0.001;
    double dropout = 0.3;
    double noise_std = 0.2;
    double t0 = 10.0;  // concrete temperature schedule
    double tb = 0.1;
};

// Per-epoch training losses, for convergence checks and debugging.
struct FitTrace {
    std::vector<double> total;
    std::vector<double> reconstruction;
    std::vector<double> cox;
};

class FingerprintModel {
public:
    virtual ~FingerprintModel() = default;

    virtual ModelKind kind() const = 0;
    // effective width; may be below the configured value for rank-limited PCA
    virtual std::size_t n_fingerprints() const = 0;

    virtual void fit(const Matrix& x, const data::SurvivalLabels& labels,
                     const ModelConfig& cfg, std::uint64_t seed) = 0;
    // deterministic eval-mode mapping to n x F fingerprints
    virtual Matrix transform(const Matrix& x) const = 0;
    // F x d nonnegative attribution of input features to fingerprints
    virtual Matrix importance() const = 0;

    virtual const FitTrace& trace() const = 0;
    virtual nlohmann::json to_json() const = 0;

    // csae only: the feature index each selection neuron settled on
    virtual std::vector<std::size_t> selected_inputs() const { return {}; }
    // csae only: the trained selection layer
    virtual const concrete::ConcreteLayer* selection_layer() const { return nullptr; }
};

std::unique_ptr<FingerprintModel> make_model(ModelKind kind);
std::unique_ptr<FingerprintModel> model_from_json(const nlohmann::json& j);

struct ImportanceEntry {
    data::FeatureRef feature;
    double weight = 0.0;
};

// Per fingerprint, every input feature ranked by descending weight.
struct ImportanceReport {
    std::vector<std::vector<ImportanceEntry>> per_fingerprint;
};

ImportanceReport importance_report(const FingerprintModel& model,
                                   const std::vector<data::FeatureRef>& refs);

}  // namespace coxfuse::models
