#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <functional>
#include <stdexcept>
#include <string>

namespace mmlab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

struct EigenDecomposition {
    Vector values;   // ascending
    Matrix vectors;  // orthonormal columns
};

/// Full eigendecomposition of a dense symmetric matrix (LAPACK dsyevd).
/// Throws std::runtime_error with the LAPACK info code on failure.
EigenDecomposition sym_eigensolve(const Matrix& a);

/// Adaptive Simpson quadrature of f on [a,b] to relative tolerance rel_tol
/// (with a small absolute floor for integrals near zero).
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double rel_tol = 1e-8);

/// Least-squares line fit y ~ intercept + slope * x.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// Spearman rank correlation with average ranks for ties.
/// Returns 0 when either side is constant.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

/// FNV-1a digest over raw bytes, rendered as 16 hex digits.
std::string fnv1a_hex(const void* data, std::size_t nbytes, std::uint64_t seed = 0xcbf29ce484222325ull);

}  // namespace mmlab
