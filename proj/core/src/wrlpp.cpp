#include "cov3d/wrlpp.hpp"

#include "cov3d/errors.hpp"
#include "cov3d/spd.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace cov3d {

Matrix pairwise_geodesic_distances(const std::vector<Matrix>& points) {
  const int n = static_cast<int>(points.size());
  Matrix distances = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double d =
          geodesic_distance(points[static_cast<std::size_t>(i)],
                            points[static_cast<std::size_t>(j)]);
      distances(i, j) = d;
      distances(j, i) = d;
    }
  }
  return distances;
}

Matrix kernel_from_distances(const Matrix& distances, double sigma) {
  if (!(sigma > 0.0)) throw ConfigError("kernel bandwidth must be positive");
  Matrix kernel(distances.rows(), distances.cols());
  // scalar std::exp, matching the out-of-sample path in project()
  for (int j = 0; j < distances.cols(); ++j) {
    for (int i = 0; i < distances.rows(); ++i) {
      kernel(i, j) = std::exp(-distances(i, j) / sigma);
    }
  }
  return kernel;
}

Matrix build_kernel(const std::vector<Matrix>& points, double sigma) {
  return kernel_from_distances(pairwise_geodesic_distances(points), sigma);
}

double median_of_distances(const Matrix& distances) {
  const int n = static_cast<int>(distances.rows());
  std::vector<double> upper;
  upper.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) upper.push_back(distances(i, j));
  }
  if (upper.empty()) {
    throw ConfigError("median bandwidth needs at least two points");
  }
  std::sort(upper.begin(), upper.end());
  const std::size_t m = upper.size();
  const double median = m % 2 == 1
                            ? upper[m / 2]
                            : 0.5 * (upper[m / 2 - 1] + upper[m / 2]);
  return median > 0.0 ? median : 1.0;
}

double median_bandwidth(const std::vector<Matrix>& points) {
  return median_of_distances(pairwise_geodesic_distances(points));
}

WeightedGraph build_weighted_graph(const Matrix& kernel,
                                   const std::vector<int>& labels,
                                   const Vector& weights, int k) {
  const int n = static_cast<int>(kernel.rows());
  if (static_cast<int>(labels.size()) != n || weights.size() != n) {
    throw ConfigError("graph: labels/weights size mismatch");
  }
  if (k < 1) throw ConfigError("graph: k must be >= 1");
  for (int i = 0; i < n; ++i) {
    if (weights[i] < 0.0) throw ConfigError("graph: negative sample weight");
  }

  std::vector<int> class_size(labels.size(), 0);
  for (int i = 0; i < n; ++i) {
    int count = 0;
    for (int j = 0; j < n; ++j) {
      if (labels[static_cast<std::size_t>(j)] ==
          labels[static_cast<std::size_t>(i)]) {
        ++count;
      }
    }
    class_size[static_cast<std::size_t>(i)] = count;
  }

  // same-label kNN by kernel similarity; ties prefer the lower index
  Eigen::MatrixXi neighbour = Eigen::MatrixXi::Zero(n, n);
  std::vector<std::pair<double, int>> candidates;
  for (int i = 0; i < n; ++i) {
    candidates.clear();
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      if (labels[static_cast<std::size_t>(j)] !=
          labels[static_cast<std::size_t>(i)]) {
        continue;
      }
      candidates.emplace_back(kernel(i, j), j);
    }
    const int k_eff =
        std::min(k, class_size[static_cast<std::size_t>(i)] - 1);
    if (k_eff < 1) continue;
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const auto& a, const auto& b) {
                       if (a.first != b.first) return a.first > b.first;
                       return a.second < b.second;
                     });
    for (int m = 0; m < k_eff && m < static_cast<int>(candidates.size());
         ++m) {
      neighbour(i, candidates[static_cast<std::size_t>(m)].second) = 1;
    }
  }

  WeightedGraph graph;
  graph.adjacency = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      if (neighbour(i, j) || neighbour(j, i)) {
        graph.adjacency(i, j) = weights[i] * weights[j];
      }
    }
  }
  graph.degrees = graph.adjacency.rowwise().sum();
  graph.laplacian = Matrix(graph.degrees.asDiagonal()) - graph.adjacency;
  return graph;
}

namespace {

// Canonical basis of a degenerate eigenvalue cluster. Laplacian null
// directions (one per same-label component) make the smallest
// eigenvalues multiple, so raw eigenvectors rotate arbitrarily inside
// the cluster whenever the input matrices change by rounding noise.
// Pivoted Gram-Schmidt over the spectral projector depends only on the
// eigenspace and commutes with sample permutations; the Cholesky step
// restores orthonormality in the constraint metric.
Matrix canonical_cluster_basis(const Matrix& vectors,
                               const Matrix& constraint) {
  const int n = static_cast<int>(vectors.rows());
  const int m = static_cast<int>(vectors.cols());
  Matrix projector = vectors * vectors.transpose();

  Matrix basis(n, m);
  std::vector<bool> used(static_cast<std::size_t>(n), false);
  for (int picked = 0; picked < m; ++picked) {
    int pivot = -1;
    double best = -1.0;
    for (int j = 0; j < n; ++j) {
      if (used[static_cast<std::size_t>(j)]) continue;
      const double norm = projector.col(j).norm();
      if (norm > best) {
        best = norm;
        pivot = j;
      }
    }
    if (pivot < 0 || best <= 0.0) {
      throw EigenFailureError("wrlpp: rank-deficient eigenvalue cluster");
    }
    used[static_cast<std::size_t>(pivot)] = true;
    const Vector q = projector.col(pivot) / best;
    basis.col(picked) = q;
    projector -= q * (q.transpose() * projector);
  }

  const Matrix gram = basis.transpose() * constraint * basis;
  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success) return basis;  // keep Euclidean basis
  const Matrix lower = llt.matrixL();
  return lower.triangularView<Eigen::Lower>()
      .solve(basis.transpose())
      .transpose();
}

}  // namespace

WrlppModel fit_wrlpp_precomputed(const std::vector<Matrix>& points,
                                 const Matrix& distances,
                                 const std::vector<int>& labels,
                                 const Vector& weights, int k, int r,
                                 double sigma) {
  const int n = static_cast<int>(points.size());
  if (n < 2) throw ConfigError("wrlpp: need at least two training points");
  if (r < 1 || r > n) {
    throw ConfigError("wrlpp: target dimension must be in [1, N]");
  }
  if (sigma <= 0.0) sigma = median_of_distances(distances);

  const Matrix kernel = kernel_from_distances(distances, sigma);
  const WeightedGraph graph = build_weighted_graph(kernel, labels, weights, k);
  if ((graph.adjacency.array() > 0.0).count() == 0) {
    throw GraphEmptyError("wrlpp: adjacency graph has no edges");
  }

  const Matrix lhs = kernel * graph.laplacian * kernel.transpose();
  Matrix rhs = kernel * Matrix(graph.degrees.asDiagonal()) *
               kernel.transpose();
  const double ridge = 1e-8 * rhs.trace() / n;
  rhs.diagonal().array() += ridge;
  rhs = 0.5 * (rhs + rhs.transpose()).eval();

  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> solver(
      Matrix(0.5 * (lhs + lhs.transpose())), rhs);
  if (solver.info() != Eigen::Success) {
    throw EigenFailureError("wrlpp: generalized eigensolver failed");
  }

  const Vector eigenvalues = solver.eigenvalues();
  Matrix vectors = solver.eigenvectors();
  const double cluster_tol =
      1e-7 * std::max(1.0, eigenvalues.cwiseAbs().maxCoeff());

  Matrix projection(n, r);
  int start = 0;
  while (start < r) {
    int end = start;
    while (end + 1 < n &&
           eigenvalues[end + 1] - eigenvalues[end] <= cluster_tol) {
      ++end;
    }
    const int size = end - start + 1;
    if (size == 1) {
      projection.col(start) = vectors.col(start);
    } else {
      const Matrix canonical =
          canonical_cluster_basis(vectors.middleCols(start, size), rhs);
      const int keep = std::min(r, end + 1) - start;
      projection.middleCols(start, keep) = canonical.leftCols(keep);
    }
    start = end + 1;
  }

  WrlppModel model;
  model.sigma = sigma;
  model.train_points = points;
  model.projection = std::move(projection);
  // unit-norm, sign-normalized columns: invariant under a global
  // rescaling of the sample weights
  for (int c = 0; c < r; ++c) {
    auto col = model.projection.col(c);
    const double norm = col.norm();
    if (norm > 0.0) col /= norm;
    int argmax = 0;
    col.cwiseAbs().maxCoeff(&argmax);
    if (col[argmax] < 0.0) col = -col;
  }
  return model;
}

WrlppModel fit_wrlpp(const std::vector<Matrix>& points,
                     const std::vector<int>& labels, const Vector& weights,
                     int k, int r, double sigma) {
  return fit_wrlpp_precomputed(points, pairwise_geodesic_distances(points),
                               labels, weights, k, r, sigma);
}

Vector project(const WrlppModel& model, const Matrix& point) {
  const int n = static_cast<int>(model.train_points.size());
  if (point.rows() != model.train_points[0].rows()) {
    throw ConfigError("project: descriptor dimension mismatch");
  }
  Vector kernel_column(n);
  for (int i = 0; i < n; ++i) {
    kernel_column[i] = std::exp(
        -geodesic_distance(model.train_points[static_cast<std::size_t>(i)],
                           point) /
        model.sigma);
  }
  return model.projection.transpose() * kernel_column;
}

}  // namespace cov3d
