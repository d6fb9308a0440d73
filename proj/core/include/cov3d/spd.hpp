#pragma once

#include "cov3d/types.hpp"

#include <vector>

namespace cov3d {

/// Eigenvalues at or below kSpdEigenvalueTolerance * lambda_max raise
/// NotPositiveDefiniteError instead of being clamped; regularize the
/// input upstream instead.
inline constexpr double kSpdEigenvalueTolerance = 1e-12;

/// Matrix logarithm of a symmetric positive definite matrix via
/// eigendecomposition.
Matrix matrix_log(const Matrix& spd);

/// Matrix exponential of a symmetric matrix; the result is SPD.
Matrix matrix_exp(const Matrix& symmetric);

/// Tangent vector at base pointing to target:
/// base^1/2 log(base^-1/2 target base^-1/2) base^1/2.
Matrix log_map(const Matrix& base, const Matrix& target);

/// Affine-invariant geodesic distance sqrt(sum_i ln^2 lambda_i) with
/// lambda_i the generalized eigenvalues of (y, x).
double geodesic_distance(const Matrix& x, const Matrix& y);

struct KarcherResult {
  Matrix mean;
  bool converged = false;
  int iterations = 0;
};

/// Weighted Karcher mean by fixed-point iteration in the tangent space,
/// initialized at the weighted arithmetic mean. Empty weights mean
/// uniform. When the tangent update still exceeds the tolerance after
/// max_iterations, the best iterate is returned with converged=false.
KarcherResult karcher_mean(const std::vector<Matrix>& points,
                           const std::vector<double>& weights = {},
                           int max_iterations = 50, double tolerance = 1e-8);

/// Row-major upper triangle with off-diagonal entries scaled by
/// sqrt(2), so the Euclidean norm of the vector equals the Frobenius
/// norm of the matrix.
Vector vectorize_upper_triangle(const Matrix& symmetric);

/// Inverse of vectorize_upper_triangle.
Matrix unvectorize_upper_triangle(const Vector& packed, int dim);

}  // namespace cov3d
