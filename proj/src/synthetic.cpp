#include "coxfuse/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "coxfuse/errors.hpp"
#include "coxfuse/format.hpp"
#include "coxfuse/rng.hpp"

namespace coxfuse::synth {

namespace {

void validate_spec(const SyntheticSpec& spec) {
    if (spec.n_samples == 0) throw ConfigError("n_samples must be positive");
    if (spec.layers.empty()) throw ConfigError("at least one layer required");
    std::set<std::string> names;
    for (const auto& [name, width] : spec.layers) {
        if (name.empty()) throw ConfigError("layer name must be non-empty");
        if (!names.insert(name).second)
            throw ConfigError("duplicate layer name: " + name);
        if (width == 0) throw ConfigError("layer '" + name + "' must have features");
    }
    for (const auto& p : spec.planted) {
        auto it = std::find_if(spec.layers.begin(), spec.layers.end(),
                               [&](const auto& l) { return l.first == p.layer; });
        if (it == spec.layers.end())
            throw ConfigError("planted weight references unknown layer: " + p.layer);
        if (p.feature >= it->second)
            throw ConfigError("planted feature index out of range in layer: " + p.layer);
    }
    if (spec.censoring_rate < 0.0 || spec.censoring_rate >= 1.0)
        throw ConfigError("censoring_rate must be in [0, 1)");
}

std::string padded_id(std::size_t i, std::size_t width) {
    std::string digits = std::to_string(i);
    return "S" + std::string(width - digits.size(), '0') + digits;
}

double exp1(Rng& rng) {
    // standard exponential via inverse CDF, kept away from log(0)
    return -std::log(std::max(1.0 - rng.uniform(), 1e-300));
}

}  // namespace

data::MultiOmicsDataset generate_synthetic(const SyntheticSpec& spec) {
    validate_spec(spec);
    const std::size_t n = spec.n_samples;

    data::MultiOmicsDataset ds;
    const std::size_t id_width = std::to_string(n - 1).size();
    ds.sample_ids.reserve(n);
    for (std::size_t i = 0; i < n; ++i) ds.sample_ids.push_back(padded_id(i, id_width));

    Rng feature_rng(derive_seed(spec.seed, 1));
    for (const auto& [name, width] : spec.layers) {
        data::OmicsLayer layer;
        layer.name = name;
        layer.feature_names.reserve(width);
        for (std::size_t j = 0; j < width; ++j)
            layer.feature_names.push_back("f" + std::to_string(j));
        layer.values = Matrix(n, width);
        for (std::size_t i = 0; i < n; ++i) {
            double* row = layer.values.row(i);
            for (std::size_t j = 0; j < width; ++j) row[j] = feature_rng.normal();
        }
        ds.layers.push_back(std::move(layer));
    }

    std::vector<double> log_hazard(n, 0.0);
    for (const auto& p : spec.planted) {
        const auto it = std::find_if(ds.layers.begin(), ds.layers.end(),
                                     [&](const auto& l) { return l.name == p.layer; });
        for (std::size_t i = 0; i < n; ++i)
            log_hazard[i] += p.weight * it->values(i, p.feature);
    }

    Rng event_rng(derive_seed(spec.seed, 2));
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i)
        t[i] = exp1(event_rng) * std::exp(-log_hazard[i]);

    Rng censor_rng(derive_seed(spec.seed, 3));
    std::vector<double> censor_draw(n);
    for (std::size_t i = 0; i < n; ++i) censor_draw[i] = exp1(censor_rng);

    // A sample is censored iff censor_draw/rate < t, i.e. rate > draw/t.
    // Picking the rate between order statistics of draw/t pins the achieved
    // censoring count to round(rate * n) exactly.
    double censor_rate = 0.0;
    if (spec.censoring_rate > 0.0) {
        std::vector<double> threshold(n);
        for (std::size_t i = 0; i < n; ++i) threshold[i] = censor_draw[i] / t[i];
        std::sort(threshold.begin(), threshold.end());
        const std::size_t m = std::min(
            static_cast<std::size_t>(std::llround(spec.censoring_rate * static_cast<double>(n))),
            n - 1);
        if (m > 0) censor_rate = 0.5 * (threshold[m - 1] + threshold[m]);
    }

    ds.survival.time.resize(n);
    ds.survival.event.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double c = censor_rate > 0.0 ? censor_draw[i] / censor_rate
                                           : std::numeric_limits<double>::infinity();
        if (c < t[i]) {
            ds.survival.time[i] = c;
            ds.survival.event[i] = 0;
        } else {
            ds.survival.time[i] = t[i];
            ds.survival.event[i] = 1;
        }
    }
    return ds;
}

void write_dataset_tsv(const data::MultiOmicsDataset& dataset,
                       const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);

    for (const auto& layer : dataset.layers) {
        std::ofstream out(dir / (layer.name + ".tsv"), std::ios::binary);
        if (!out) throw DataError("cannot write layer file: " + layer.name);
        out << "sample_id";
        for (const auto& f : layer.feature_names) out << '\t' << f;
        out << '\n';
        for (std::size_t i = 0; i < dataset.n_samples(); ++i) {
            out << dataset.sample_ids[i];
            const double* row = layer.values.row(i);
            for (std::size_t j = 0; j < layer.n_features(); ++j)
                out << '\t' << format_double(row[j]);
            out << '\n';
        }
    }

    std::ofstream out(dir / "survival.tsv", std::ios::binary);
    if (!out) throw DataError("cannot write survival file");
    out << "sample_id\ttime\tevent\n";
    for (std::size_t i = 0; i < dataset.n_samples(); ++i) {
        out << dataset.sample_ids[i] << '\t' << format_double(dataset.survival.time[i])
            << '\t' << static_cast<int>(dataset.survival.event[i]) << '\n';
    }
}

}  // namespace coxfuse::synth
