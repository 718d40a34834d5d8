#pragma once

#include <span>
#include <vector>

#include "coxfuse/matrix.hpp"

// Hot numeric loops, OpenMP-parallel over independent output blocks.
// Every kernel accumulates in the same per-element order as its serial
// counterpart in kernels::ref, so results do not depend on the thread
// count. ref is the plain-loop reference used by the tests and the
// benchmark tool.
namespace coxfuse::kernels {

// out = a * b            (m×k · k×n)
void matmul(const Matrix& a, const Matrix& b, Matrix& out);
// out = a^T * b          (k×m · k×n, both walked row-wise)
void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out);
// out = a * b^T          (m×k · n×k)
void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out);

// m(r, :) += v
void add_row_vector(Matrix& m, std::span<const double> v);

std::vector<double> column_means(const Matrix& m);
// population variance (divide by n)
std::vector<double> column_variances(const Matrix& m);
std::vector<double> column_sums(const Matrix& m);

// m(r, c) = (m(r, c) - shift[c]) * scale[c]
void shift_scale_columns(Matrix& m, std::span<const double> shift, std::span<const double> scale);

// squared Euclidean distances, points n×d vs centers k×d -> out n×k
void pairwise_sqdist(const Matrix& points, const Matrix& centers, Matrix& out);

namespace ref {

void matmul(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out);
std::vector<double> column_means(const Matrix& m);
std::vector<double> column_variances(const Matrix& m);
void pairwise_sqdist(const Matrix& points, const Matrix& centers, Matrix& out);

}  // namespace ref

}  // namespace coxfuse::kernels
