#pragma once

#include "cov3d/types.hpp"

#include <vector>

namespace cov3d {

/// All pairwise geodesic distances; symmetric with zero diagonal.
Matrix pairwise_geodesic_distances(const std::vector<Matrix>& points);

/// Heat pseudo-kernel exp(-d/sigma) from a distance matrix.
Matrix kernel_from_distances(const Matrix& distances, double sigma);

/// Heat pseudo-kernel between all point pairs.
Matrix build_kernel(const std::vector<Matrix>& points, double sigma);

/// Median of the strict upper-triangle entries; 1.0 when the median is
/// zero (degenerate point sets).
double median_of_distances(const Matrix& distances);

/// Median pairwise geodesic distance bandwidth heuristic.
double median_bandwidth(const std::vector<Matrix>& points);

struct WeightedGraph {
  Matrix adjacency;  // w_i * w_j on same-label kNN edges, 0 elsewhere
  Vector degrees;    // row sums of adjacency
  Matrix laplacian;  // diag(degrees) - adjacency
};

/// Same-label k-nearest-neighbour graph in kernel similarity, OR
/// symmetrized, with edge weights w_i * w_j. k is clamped to class
/// size - 1; neighbour ties break on the lower training index.
/// Isolated nodes keep a zero row.
WeightedGraph build_weighted_graph(const Matrix& kernel,
                                   const std::vector<int>& labels,
                                   const Vector& weights, int k);

struct WrlppModel {
  double sigma = 0.0;
  std::vector<Matrix> train_points;
  Matrix projection;  // N x r, columns ascending by eigenvalue

  int input_dim() const {
    return train_points.empty() ? 0 : static_cast<int>(train_points[0].rows());
  }
  int output_dim() const { return static_cast<int>(projection.cols()); }
};

/// Solves (K L K) a = lambda (K D K + eps I) a, keeping the
/// eigenvectors of the r smallest eigenvalues. Columns are scaled to
/// unit Euclidean norm and sign-normalized (largest-magnitude entry
/// positive); they stay orthogonal in the K D K + eps I inner product.
/// The unit-norm scaling keeps the map invariant under a global
/// rescaling of the sample weights. sigma <= 0 selects the median
/// bandwidth heuristic.
WrlppModel fit_wrlpp(const std::vector<Matrix>& points,
                     const std::vector<int>& labels, const Vector& weights,
                     int k, int r, double sigma = 0.0);

/// fit_wrlpp with distances already computed (they only depend on the
/// points, so callers may cache them).
WrlppModel fit_wrlpp_precomputed(const std::vector<Matrix>& points,
                                 const Matrix& distances,
                                 const std::vector<int>& labels,
                                 const Vector& weights, int k, int r,
                                 double sigma = 0.0);

/// Euclidean image of a manifold point: A^T [exp(-d(X_i, c)/sigma)]_i.
Vector project(const WrlppModel& model, const Matrix& point);

}  // namespace cov3d
