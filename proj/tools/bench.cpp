// Micro-benchmark comparing the OpenMP kernels against the serial
// reference loops. Sizes mirror the training workload (full-batch dense
// layers around n=300, d=300..512, f=128).
#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "coxfuse/kernels.hpp"
#include "coxfuse/matrix.hpp"
#include "coxfuse/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using coxfuse::Matrix;

namespace {

double now_s() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

Matrix random_matrix(std::size_t r, std::size_t c, coxfuse::Rng& rng) {
    Matrix m(r, c);
    for (double& v : m.values()) v = rng.uniform(-1.0, 1.0);
    return m;
}

template <typename F>
double time_best_of(int reps, double flops, F&& fn) {
    double best = 1e300;
    for (int i = 0; i < reps; ++i) {
        const double t0 = now_s();
        fn();
        best = std::min(best, now_s() - t0);
    }
    return flops / best * 1e-9;  // GFLOP/s
}

struct Case {
    const char* name;
    std::size_t m, k, n;
};

}  // namespace

int main(int argc, char** argv) {
    int reps = 5;
    if (argc > 1) reps = std::stoi(argv[1]);

#ifdef _OPENMP
    std::printf("threads: %d\n", omp_get_max_threads());
#else
    std::printf("threads: 1 (OpenMP disabled)\n");
#endif

    coxfuse::Rng rng(42);
    const Case cases[] = {
        {"enc1  300x300*300x512", 300, 300, 512},
        {"enc2  300x512*512x128", 300, 512, 128},
        {"dec2  300x512*512x300", 300, 512, 300},
        {"big   768x1024*1024x512", 768, 1024, 512},
    };

    std::printf("%-26s %12s %12s %8s\n", "case", "omp GF/s", "ref GF/s", "speedup");
    for (const Case& c : cases) {
        Matrix a = random_matrix(c.m, c.k, rng);
        Matrix b = random_matrix(c.k, c.n, rng);
        Matrix out_omp, out_ref;
        const double flops = 2.0 * double(c.m) * double(c.k) * double(c.n);
        const double gf_omp = time_best_of(reps, flops, [&] { coxfuse::kernels::matmul(a, b, out_omp); });
        const double gf_ref = time_best_of(reps, flops, [&] { coxfuse::kernels::ref::matmul(a, b, out_ref); });

        double max_diff = 0.0;
        for (std::size_t i = 0; i < out_omp.size(); ++i)
            max_diff = std::max(max_diff, std::abs(out_omp.data()[i] - out_ref.data()[i]));
        std::printf("%-26s %12.2f %12.2f %7.2fx   (max |diff| %.3g)\n", c.name, gf_omp, gf_ref,
                    gf_omp / gf_ref, max_diff);
    }

    // transpose-variant GEMMs used by the backward passes
    {
        Matrix a = random_matrix(300, 512, rng);
        Matrix g = random_matrix(300, 300, rng);
        Matrix out1, out2, r1, r2;
        const double f_tn = 2.0 * 512 * 300 * 300;
        const double f_nt = 2.0 * 300 * 300 * 512;
        Matrix w = random_matrix(512, 300, rng);
        const double gf_tn = time_best_of(reps, f_tn, [&] { coxfuse::kernels::matmul_tn(a, g, out1); });
        const double gf_tn_ref = time_best_of(reps, f_tn, [&] { coxfuse::kernels::ref::matmul_tn(a, g, r1); });
        const double gf_nt = time_best_of(reps, f_nt, [&] { coxfuse::kernels::matmul_nt(g, w, out2); });
        const double gf_nt_ref = time_best_of(reps, f_nt, [&] { coxfuse::kernels::ref::matmul_nt(g, w, r2); });
        std::printf("%-26s %12.2f %12.2f %7.2fx\n", "tn    512x300*300x300", gf_tn, gf_tn_ref, gf_tn / gf_tn_ref);
        std::printf("%-26s %12.2f %12.2f %7.2fx\n", "nt    300x300*512x300^T", gf_nt, gf_nt_ref, gf_nt / gf_nt_ref);
    }
    return 0;
}
