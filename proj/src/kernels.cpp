#include "coxfuse/kernels.hpp"

#include <cstddef>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace coxfuse::kernels {

namespace {

void check_shapes(std::size_t a, std::size_t b, const char* what) {
    if (a != b) throw std::invalid_argument(std::string("dimension mismatch in ") + what);
}

// Work thresholds below which the OpenMP pragma stays serial.
constexpr std::size_t kParallelFlops = 1u << 16;

}  // namespace

void matmul(const Matrix& a, const Matrix& b, Matrix& out) {
    check_shapes(a.cols(), b.rows(), "matmul");
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    out.resize(m, n);
    out.fill(0.0);
    const bool big = m * k * n >= kParallelFlops;
#pragma omp parallel for schedule(static) if (big)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m); ++i) {
        double* oi = out.row(static_cast<std::size_t>(i));
        const double* ai = a.row(static_cast<std::size_t>(i));
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double aik = ai[kk];
            const double* bk = b.row(kk);
#pragma omp simd
            for (std::size_t j = 0; j < n; ++j) oi[j] += aik * bk[j];
        }
    }
}

void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out) {
    check_shapes(a.rows(), b.rows(), "matmul_tn");
    const std::size_t m = a.cols(), k = a.rows(), n = b.cols();
    out.resize(m, n);
    out.fill(0.0);
    const bool big = m * k * n >= kParallelFlops;
#pragma omp parallel for schedule(static) if (big)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m); ++i) {
        double* oi = out.row(static_cast<std::size_t>(i));
        for (std::size_t r = 0; r < k; ++r) {
            const double air = a(r, static_cast<std::size_t>(i));
            const double* br = b.row(r);
#pragma omp simd
            for (std::size_t j = 0; j < n; ++j) oi[j] += air * br[j];
        }
    }
}

void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out) {
    check_shapes(a.cols(), b.cols(), "matmul_nt");
    const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
    out.resize(m, n);
    const bool big = m * k * n >= kParallelFlops;
#pragma omp parallel for schedule(static) if (big)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m); ++i) {
        const double* ai = a.row(static_cast<std::size_t>(i));
        double* oi = out.row(static_cast<std::size_t>(i));
        for (std::size_t j = 0; j < n; ++j) {
            const double* bj = b.row(j);
            double acc = 0.0;
#pragma omp simd reduction(+ : acc)
            for (std::size_t kk = 0; kk < k; ++kk) acc += ai[kk] * bj[kk];
            oi[j] = acc;
        }
    }
}

void add_row_vector(Matrix& m, std::span<const double> v) {
    check_shapes(m.cols(), v.size(), "add_row_vector");
    const std::size_t rows = m.rows(), cols = m.cols();
    const bool big = rows * cols >= kParallelFlops;
#pragma omp parallel for schedule(static) if (big)
    for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(rows); ++r) {
        double* mr = m.row(static_cast<std::size_t>(r));
        for (std::size_t c = 0; c < cols; ++c) mr[c] += v[c];
    }
}

std::vector<double> column_sums(const Matrix& m) {
    const std::size_t rows = m.rows(), cols = m.cols();
    std::vector<double> sums(cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* mr = m.row(r);
        for (std::size_t c = 0; c < cols; ++c) sums[c] += mr[c];
    }
    return sums;
}

std::vector<double> column_means(const Matrix& m) {
    if (m.rows() == 0) return std::vector<double>(m.cols(), 0.0);
    std::vector<double> out = column_sums(m);
    const double inv = 1.0 / static_cast<double>(m.rows());
    for (double& v : out) v *= inv;
    return out;
}

std::vector<double> column_variances(const Matrix& m) {
    const std::size_t rows = m.rows(), cols = m.cols();
    std::vector<double> mean = column_means(m);
    std::vector<double> var(cols, 0.0);
    if (rows == 0) return var;
    // column-block parallel keeps each column's accumulation order fixed
    const bool big = rows * cols >= kParallelFlops;
#pragma omp parallel for schedule(static) if (big)
    for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(cols); ++c) {
        const std::size_t cc = static_cast<std::size_t>(c);
        double acc = 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
            const double d = m(r, cc) - mean[cc];
            acc += d * d;
        }
        var[cc] = acc / static_cast<double>(rows);
    }
    return var;
}

void shift_scale_columns(Matrix& m, std::span<const double> shift, std::span<const double> scale) {
    check_shapes(m.cols(), shift.size(), "shift_scale_columns");
    check_shapes(m.cols(), scale.size(), "shift_scale_columns");
    const std::size_t rows = m.rows(), cols = m.cols();
    const bool big = rows * cols >= kParallelFlops;
#pragma omp parallel for schedule(static) if (big)
    for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(rows); ++r) {
        double* mr = m.row(static_cast<std::size_t>(r));
#pragma omp simd
        for (std::size_t c = 0; c < cols; ++c) mr[c] = (mr[c] - shift[c]) * scale[c];
    }
}

void pairwise_sqdist(const Matrix& points, const Matrix& centers, Matrix& out) {
    check_shapes(points.cols(), centers.cols(), "pairwise_sqdist");
    const std::size_t n = points.rows(), k = centers.rows(), d = points.cols();
    out.resize(n, k);
    const bool big = n * k * d >= kParallelFlops;
#pragma omp parallel for schedule(static) if (big)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
        const double* pi = points.row(static_cast<std::size_t>(i));
        double* oi = out.row(static_cast<std::size_t>(i));
        for (std::size_t c = 0; c < k; ++c) {
            const double* cc = centers.row(c);
            double acc = 0.0;
#pragma omp simd reduction(+ : acc)
            for (std::size_t j = 0; j < d; ++j) {
                const double diff = pi[j] - cc[j];
                acc += diff * diff;
            }
            oi[c] = acc;
        }
    }
}

namespace ref {

void matmul(const Matrix& a, const Matrix& b, Matrix& out) {
    check_shapes(a.cols(), b.rows(), "ref::matmul");
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    out.resize(m, n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t kk = 0; kk < k; ++kk) acc += a(i, kk) * b(kk, j);
            out(i, j) = acc;
        }
}

void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out) {
    check_shapes(a.rows(), b.rows(), "ref::matmul_tn");
    const std::size_t m = a.cols(), k = a.rows(), n = b.cols();
    out.resize(m, n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t r = 0; r < k; ++r) acc += a(r, i) * b(r, j);
            out(i, j) = acc;
        }
}

void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out) {
    check_shapes(a.cols(), b.cols(), "ref::matmul_nt");
    const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
    out.resize(m, n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t kk = 0; kk < k; ++kk) acc += a(i, kk) * b(j, kk);
            out(i, j) = acc;
        }
}

std::vector<double> column_means(const Matrix& m) {
    std::vector<double> out(m.cols(), 0.0);
    if (m.rows() == 0) return out;
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) out[c] += m(r, c);
    for (double& v : out) v /= static_cast<double>(m.rows());
    return out;
}

std::vector<double> column_variances(const Matrix& m) {
    std::vector<double> mean = column_means(m);
    std::vector<double> var(m.cols(), 0.0);
    if (m.rows() == 0) return var;
    for (std::size_t c = 0; c < m.cols(); ++c) {
        double acc = 0.0;
        for (std::size_t r = 0; r < m.rows(); ++r) {
            const double d = m(r, c) - mean[c];
            acc += d * d;
        }
        var[c] = acc / static_cast<double>(m.rows());
    }
    return var;
}

void pairwise_sqdist(const Matrix& points, const Matrix& centers, Matrix& out) {
    check_shapes(points.cols(), centers.cols(), "ref::pairwise_sqdist");
    out.resize(points.rows(), centers.rows());
    for (std::size_t i = 0; i < points.rows(); ++i)
        for (std::size_t c = 0; c < centers.rows(); ++c) {
            double acc = 0.0;
            for (std::size_t j = 0; j < points.cols(); ++j) {
                const double diff = points(i, j) - centers(c, j);
                acc += diff * diff;
            }
            out(i, c) = acc;
        }
}

}  // namespace ref

}  // namespace coxfuse::kernels
