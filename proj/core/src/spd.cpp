#include "cov3d/spd.hpp"

#include "cov3d/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>

namespace cov3d {

namespace {

void require_square_symmetric(const Matrix& m, const char* who) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw ConfigError(std::string(who) + ": matrix must be square");
  }
  const double scale = m.cwiseAbs().maxCoeff();
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * std::max(scale, 1.0)) {
    throw ConfigError(std::string(who) + ": matrix is not symmetric");
  }
}

Eigen::SelfAdjointEigenSolver<Matrix> decompose(const Matrix& m,
                                                const char* who) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(
      Matrix(0.5 * (m + m.transpose())));
  if (solver.info() != Eigen::Success) {
    throw EigenFailureError(std::string(who) + ": eigendecomposition failed");
  }
  return solver;
}

void require_positive(const Vector& eigenvalues, const char* who) {
  const double largest = eigenvalues.maxCoeff();
  const double floor = kSpdEigenvalueTolerance * largest;
  if (!(largest > 0.0) || eigenvalues.minCoeff() <= floor) {
    throw NotPositiveDefiniteError(
        std::string(who) + ": eigenvalue " +
        std::to_string(eigenvalues.minCoeff()) + " below tolerance " +
        std::to_string(floor));
  }
}

// spd^power through the same eigendecomposition machinery
Matrix symmetric_power(const Matrix& spd, double power, const char* who) {
  auto solver = decompose(spd, who);
  require_positive(solver.eigenvalues(), who);
  Vector powered = solver.eigenvalues().array().pow(power);
  return solver.eigenvectors() * powered.asDiagonal() *
         solver.eigenvectors().transpose();
}

}  // namespace

Matrix matrix_log(const Matrix& spd) {
  require_square_symmetric(spd, "matrix_log");
  auto solver = decompose(spd, "matrix_log");
  require_positive(solver.eigenvalues(), "matrix_log");
  Vector logged = solver.eigenvalues().array().log();
  return solver.eigenvectors() * logged.asDiagonal() *
         solver.eigenvectors().transpose();
}

Matrix matrix_exp(const Matrix& symmetric) {
  require_square_symmetric(symmetric, "matrix_exp");
  auto solver = decompose(symmetric, "matrix_exp");
  Vector exped = solver.eigenvalues().array().exp();
  return solver.eigenvectors() * exped.asDiagonal() *
         solver.eigenvectors().transpose();
}

Matrix log_map(const Matrix& base, const Matrix& target) {
  require_square_symmetric(base, "log_map");
  require_square_symmetric(target, "log_map");
  const Matrix root = symmetric_power(base, 0.5, "log_map");
  const Matrix inv_root = symmetric_power(base, -0.5, "log_map");
  // the congruence is symmetric in exact arithmetic; drop the rounding
  // skew before the eigendecomposition
  Matrix inner = inv_root * target * inv_root;
  inner = 0.5 * (inner + inner.transpose()).eval();
  const Matrix middle = matrix_log(inner);
  Matrix out = root * middle * root;
  return 0.5 * (out + out.transpose()).eval();
}

double geodesic_distance(const Matrix& x, const Matrix& y) {
  require_square_symmetric(x, "geodesic_distance");
  require_square_symmetric(y, "geodesic_distance");
  if (x.rows() != y.rows()) {
    throw ConfigError("geodesic_distance: dimension mismatch");
  }
  if ((x.array() == y.array()).all()) {
    return 0.0;  // identical points are at distance zero exactly
  }
  // canonical argument order: the value is symmetric in exact
  // arithmetic, ordering the inputs makes it symmetric in floating
  // point as well
  const Matrix* first = &x;
  const Matrix* second = &y;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x.data()[i] != y.data()[i]) {
      if (x.data()[i] > y.data()[i]) std::swap(first, second);
      break;
    }
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> solver(
      Matrix(0.5 * (*second + second->transpose())),
      Matrix(0.5 * (*first + first->transpose())));
  if (solver.info() != Eigen::Success) {
    throw EigenFailureError("geodesic_distance: generalized solve failed");
  }
  // generalized eigenvalues are ratios of the two spectra and may
  // legitimately span many orders of magnitude; only a non-positive or
  // non-finite value means an input was not positive definite
  double sum = 0.0;
  for (int i = 0; i < solver.eigenvalues().size(); ++i) {
    const double lambda = solver.eigenvalues()[i];
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
      throw NotPositiveDefiniteError(
          "geodesic_distance: generalized eigenvalue " +
          std::to_string(lambda));
    }
    const double l = std::log(lambda);
    sum += l * l;
  }
  return std::sqrt(sum);
}

KarcherResult karcher_mean(const std::vector<Matrix>& points,
                           const std::vector<double>& weights,
                           int max_iterations, double tolerance) {
  if (points.empty()) {
    throw ConfigError("karcher_mean: need at least one point");
  }
  std::vector<double> w = weights;
  if (w.empty()) w.assign(points.size(), 1.0);
  if (w.size() != points.size()) {
    throw ConfigError("karcher_mean: weights/points size mismatch");
  }
  double total = 0.0;
  for (double wi : w) {
    if (wi < 0.0) throw ConfigError("karcher_mean: negative weight");
    total += wi;
  }
  if (!(total > 0.0)) {
    throw ConfigError("karcher_mean: weights sum to zero");
  }

  const int d = static_cast<int>(points[0].rows());
  Matrix mean = Matrix::Zero(d, d);
  for (std::size_t i = 0; i < points.size(); ++i) {
    mean += (w[i] / total) * points[i];
  }
  mean = 0.5 * (mean + mean.transpose()).eval();

  KarcherResult result;
  for (int iter = 0; iter <= max_iterations; ++iter) {
    Matrix tangent = Matrix::Zero(d, d);
    for (std::size_t i = 0; i < points.size(); ++i) {
      tangent += (w[i] / total) * log_map(mean, points[i]);
    }
    if (tangent.norm() <= tolerance) {
      result.converged = true;
      break;
    }
    if (iter == max_iterations) break;
    result.iterations = iter + 1;
    const Matrix root = symmetric_power(mean, 0.5, "karcher_mean");
    const Matrix inv_root = symmetric_power(mean, -0.5, "karcher_mean");
    Matrix inner = inv_root * tangent * inv_root;
    inner = 0.5 * (inner + inner.transpose()).eval();
    mean = root * matrix_exp(inner) * root;
    mean = 0.5 * (mean + mean.transpose()).eval();
  }
  result.mean = mean;
  return result;
}

Vector vectorize_upper_triangle(const Matrix& symmetric) {
  require_square_symmetric(symmetric, "vectorize_upper_triangle");
  const int d = static_cast<int>(symmetric.rows());
  Vector out(d * (d + 1) / 2);
  const double root2 = std::sqrt(2.0);
  int k = 0;
  for (int i = 0; i < d; ++i) {
    for (int j = i; j < d; ++j) {
      out[k++] = i == j ? symmetric(i, j) : root2 * symmetric(i, j);
    }
  }
  return out;
}

Matrix unvectorize_upper_triangle(const Vector& packed, int dim) {
  if (packed.size() != dim * (dim + 1) / 2) {
    throw ConfigError("unvectorize_upper_triangle: size mismatch");
  }
  Matrix out(dim, dim);
  const double inv_root2 = 1.0 / std::sqrt(2.0);
  int k = 0;
  for (int i = 0; i < dim; ++i) {
    for (int j = i; j < dim; ++j) {
      const double value = i == j ? packed[k] : inv_root2 * packed[k];
      out(i, j) = value;
      out(j, i) = value;
      ++k;
    }
  }
  return out;
}

}  // namespace cov3d
