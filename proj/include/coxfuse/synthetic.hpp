#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "coxfuse/data_model.hpp"

namespace coxfuse::synth {

struct PlantedWeight {
    std::string layer;
    std::size_t feature = 0;
    double weight = 0.0;
};

struct SyntheticSpec {
    std::size_t n_samples = 200;
    std::vector<std::pair<std::string, std::size_t>> layers;  // name, width
    std::vector<PlantedWeight> planted;
    double censoring_rate = 0.3;  // in [0, 1)
    std::uint64_t seed = 0;
};

// i.i.d. standard-normal features; survival times exponential with rate
// exp(sum of planted weights x features); censoring times exponential with
// the rate calibrated to hit the requested censoring fraction.
data::MultiOmicsDataset generate_synthetic(const SyntheticSpec& spec);

// One TSV per layer plus survival.tsv, in the loader's format.
void write_dataset_tsv(const data::MultiOmicsDataset& dataset,
                       const std::filesystem::path& dir);

}  // namespace coxfuse::synth
