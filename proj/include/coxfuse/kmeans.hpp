#pragma once

#include <cstdint>
#include <vector>

#include "coxfuse/matrix.hpp"

namespace coxfuse::pipeline {

struct KMeansConfig {
    std::size_t k = 2;
    std::size_t n_init = 10;
    std::size_t max_iter = 300;
    double tol = 0.001;
};

struct KMeansResult {
    Matrix centroids;  // k x d
    double inertia = 0.0;
};

// Lloyd iterations from n_init seeded kmeans++ starts; the lowest-inertia
// run wins. Empty clusters are re-seeded from the farthest point.
KMeansResult kmeans_fit(const Matrix& z, const KMeansConfig& cfg,
                        std::uint64_t seed);

// Nearest centroid per row (Euclidean; lowest index on ties).
std::vector<std::size_t> kmeans_assign(const Matrix& centroids, const Matrix& z);

}  // namespace coxfuse::pipeline
