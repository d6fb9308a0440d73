#pragma once

#include <cov3d/integral.hpp>
#include <cov3d/types.hpp>
#include <cov3d/video.hpp>

#include <random>

namespace test_helpers {

inline cov3d::Matrix random_matrix(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  cov3d::Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = normal(rng);
  }
  return m;
}

inline cov3d::Matrix random_symmetric(std::mt19937_64& rng, int dim,
                                      double scale = 1.0) {
  cov3d::Matrix a = random_matrix(rng, dim, dim);
  return scale * 0.5 * (a + a.transpose());
}

/// SPD matrix with eigenvalues bounded away from zero.
inline cov3d::Matrix random_spd(std::mt19937_64& rng, int dim,
                                double jitter = 0.5) {
  cov3d::Matrix a = random_matrix(rng, dim, dim);
  return a * a.transpose() / dim + jitter * cov3d::Matrix::Identity(dim, dim);
}

inline cov3d::FeatureVideo random_feature_video(std::mt19937_64& rng,
                                                const cov3d::Dims& dims,
                                                int channels) {
  std::uniform_real_distribution<float> uniform(0.0f, 1.0f);
  cov3d::FeatureVideo video = cov3d::FeatureVideo::create(dims, channels);
  for (float& value : video.data) value = uniform(rng);
  return video;
}

/// Direct two-pass covariance over the window pixels; the reference
/// the integral-tensor path is checked against.
inline cov3d::Matrix direct_window_covariance(const cov3d::FeatureVideo& video,
                                              const cov3d::Window& w) {
  const int d = video.channels;
  cov3d::Vector mean = cov3d::Vector::Zero(d);
  double count = 0.0;
  for (int t = w.t1; t <= w.t2; ++t) {
    for (int y = w.y1; y <= w.y2; ++y) {
      for (int x = w.x1; x <= w.x2; ++x) {
        for (int i = 0; i < d; ++i) mean[i] += video.at(x, y, t, i);
        count += 1.0;
      }
    }
  }
  mean /= count;
  cov3d::Matrix cov = cov3d::Matrix::Zero(d, d);
  for (int t = w.t1; t <= w.t2; ++t) {
    for (int y = w.y1; y <= w.y2; ++y) {
      for (int x = w.x1; x <= w.x2; ++x) {
        cov3d::Vector z(d);
        for (int i = 0; i < d; ++i) z[i] = video.at(x, y, t, i);
        cov += (z - mean) * (z - mean).transpose();
      }
    }
  }
  return cov / (count - 1.0);
}

inline double max_abs_diff(const cov3d::Matrix& a, const cov3d::Matrix& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace test_helpers
