#include "coxfuse/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "coxfuse/kernels.hpp"
#include "coxfuse/rng.hpp"

namespace coxfuse::pipeline {

namespace {

struct SingleRun {
    Matrix centroids;
    double inertia = 0.0;
};

// squared distance of each point to its nearest current centroid
void nearest_sqdist(const Matrix& dist, std::vector<std::size_t>& labels,
                    std::vector<double>& best) {
    const std::size_t n = dist.rows(), k = dist.cols();
    labels.resize(n);
    best.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = dist.row(i);
        std::size_t arg = 0;
        for (std::size_t c = 1; c < k; ++c)
            if (row[c] < row[arg]) arg = c;
        labels[i] = arg;
        best[i] = row[arg];
    }
}

Matrix plus_plus_init(const Matrix& z, std::size_t k, Rng& rng) {
    const std::size_t n = z.rows(), d = z.cols();
    Matrix centroids(k, d);
    std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());

    std::size_t first = static_cast<std::size_t>(rng.next_below(n));
    std::copy(z.row(first), z.row(first) + d, centroids.row(0));

    for (std::size_t c = 1; c < k; ++c) {
        for (std::size_t i = 0; i < n; ++i) {
            const double* zi = z.row(i);
            const double* prev = centroids.row(c - 1);
            double acc = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double diff = zi[j] - prev[j];
                acc += diff * diff;
            }
            min_dist[i] = std::min(min_dist[i], acc);
        }
        double total = 0.0;
        for (double v : min_dist) total += v;
        std::size_t pick;
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double cum = 0.0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                cum += min_dist[i];
                if (cum > target) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = static_cast<std::size_t>(rng.next_below(n));
        }
        std::copy(z.row(pick), z.row(pick) + d, centroids.row(c));
    }
    return centroids;
}

SingleRun lloyd(const Matrix& z, Matrix centroids, const KMeansConfig& cfg) {
    const std::size_t n = z.rows(), d = z.cols(), k = cfg.k;
    Matrix dist;
    std::vector<std::size_t> labels;
    std::vector<double> best;
    std::vector<std::size_t> counts(k);

    for (std::size_t iter = 0; iter < cfg.max_iter; ++iter) {
        kernels::pairwise_sqdist(z, centroids, dist);
        nearest_sqdist(dist, labels, best);

        Matrix next(k, d, 0.0);
        std::fill(counts.begin(), counts.end(), std::size_t{0});
        for (std::size_t i = 0; i < n; ++i) {
            double* row = next.row(labels[i]);
            const double* zi = z.row(i);
            for (std::size_t j = 0; j < d; ++j) row[j] += zi[j];
            ++counts[labels[i]];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                // re-seed from the point farthest from its centroid
                std::size_t far = 0;
                for (std::size_t i = 1; i < n; ++i)
                    if (best[i] > best[far]) far = i;
                std::copy(z.row(far), z.row(far) + d, next.row(c));
                best[far] = 0.0;
            } else {
                double* row = next.row(c);
                const double inv = 1.0 / static_cast<double>(counts[c]);
                for (std::size_t j = 0; j < d; ++j) row[j] *= inv;
            }
        }

        double shift = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            const double* a = centroids.row(c);
            const double* b = next.row(c);
            double acc = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double diff = a[j] - b[j];
                acc += diff * diff;
            }
            shift = std::max(shift, std::sqrt(acc));
        }
        centroids = std::move(next);
        if (shift < cfg.tol) break;
    }

    kernels::pairwise_sqdist(z, centroids, dist);
    nearest_sqdist(dist, labels, best);
    SingleRun run;
    run.centroids = std::move(centroids);
    run.inertia = 0.0;
    for (double v : best) run.inertia += v;
    return run;
}

}  // namespace

KMeansResult kmeans_fit(const Matrix& z, const KMeansConfig& cfg,
                        std::uint64_t seed) {
    if (z.rows() < cfg.k) throw std::invalid_argument("fewer points than clusters");
    if (cfg.k < 1) throw std::invalid_argument("k must be >= 1");

    KMeansResult result;
    result.inertia = std::numeric_limits<double>::infinity();
    for (std::size_t init = 0; init < cfg.n_init; ++init) {
        Rng rng(derive_seed(seed, init, 0x6b6d)); // per-init stream
        SingleRun run = lloyd(z, plus_plus_init(z, cfg.k, rng), cfg);
        if (run.inertia < result.inertia) {
            result.inertia = run.inertia;
            result.centroids = std::move(run.centroids);
        }
    }
    return result;
}

std::vector<std::size_t> kmeans_assign(const Matrix& centroids, const Matrix& z) {
    if (centroids.cols() != z.cols())
        throw std::invalid_argument("centroid width mismatch");
    Matrix dist;
    kernels::pairwise_sqdist(z, centroids, dist);
    std::vector<std::size_t> labels;
    std::vector<double> best;
    nearest_sqdist(dist, labels, best);
    return labels;
}

}  // namespace coxfuse::pipeline
