#pragma once

#include <optional>
#include <span>
#include <vector>

#include "coxfuse/matrix.hpp"

namespace coxfuse::linalg {

// Cholesky factorization of a symmetric positive-definite matrix.
// Returns std::nullopt when the matrix is not (numerically) SPD.
std::optional<Matrix> cholesky(const Matrix& a);

// Solve a x = b given the lower-triangular Cholesky factor.
std::vector<double> cholesky_solve(const Matrix& l, std::span<const double> b);

// Full inverse from the Cholesky factor (for covariance diagonals).
Matrix cholesky_inverse(const Matrix& l);

struct EigenResult {
    std::vector<double> values;  // descending
    Matrix vectors;              // columns match values
};

// Cyclic Jacobi eigendecomposition for symmetric matrices. Throws
// std::runtime_error when the sweep cap is hit before convergence.
EigenResult jacobi_eigen_symmetric(const Matrix& a, int max_sweeps = 64, double tol = 1e-12);

double normal_cdf(double z);
// two-sided Wald p for a z-score
double wald_p(double z);
// survival function of chi-square with 1 dof
double chi2_sf_1df(double chi2);
// two-sided p of a Student t statistic with the given degrees of freedom
double student_t_two_sided_p(double t, double dof);

// regularized incomplete beta I_x(a, b)
double incomplete_beta(double a, double b, double x);

}  // namespace coxfuse::linalg
