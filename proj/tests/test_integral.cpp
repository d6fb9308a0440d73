#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cov3d/errors.hpp>
#include <cov3d/integral.hpp>

#include "helpers.hpp"

#include <Eigen/Eigenvalues>

#include <random>

using namespace cov3d;
using test_helpers::direct_window_covariance;
using test_helpers::max_abs_diff;
using test_helpers::random_feature_video;

namespace {

Window random_window(std::mt19937_64& rng, const Dims& dims) {
  for (;;) {
    std::uniform_int_distribution<int> dx(0, dims.width - 1);
    std::uniform_int_distribution<int> dy(0, dims.height - 1);
    std::uniform_int_distribution<int> dt(0, dims.length - 1);
    int x1 = dx(rng), x2 = dx(rng);
    int y1 = dy(rng), y2 = dy(rng);
    int t1 = dt(rng), t2 = dt(rng);
    if (x1 > x2) std::swap(x1, x2);
    if (y1 > y2) std::swap(y1, y2);
    if (t1 > t2) std::swap(t1, t2);
    const Window w{x1, y1, t1, x2, y2, t2};
    if (w.volume() >= 2) return w;
  }
}

}  // namespace

TEST_CASE("prefix sums on an all-ones video") {
  FeatureVideo video = FeatureVideo::create({2, 2, 2}, 1);
  for (float& v : video.data) v = 1.0f;
  const IntegralTensors tensors = build_integral_tensors(video);
  CHECK(tensors.first_at(1, 1, 1, 0) == 8.0);
  CHECK(tensors.second_at(1, 1, 1, 0, 0) == 8.0);
}

TEST_CASE("prefix sums match the brute-force oracle everywhere") {
  std::mt19937_64 rng(1);
  const Dims dims{5, 4, 3};
  const FeatureVideo video = random_feature_video(rng, dims, 3);
  const IntegralTensors tensors = build_integral_tensors(video);

  for (int t = 0; t < dims.length; ++t) {
    for (int y = 0; y < dims.height; ++y) {
      for (int x = 0; x < dims.width; ++x) {
        for (int i = 0; i < 3; ++i) {
          double first = 0.0;
          for (int tt = 0; tt <= t; ++tt) {
            for (int yy = 0; yy <= y; ++yy) {
              for (int xx = 0; xx <= x; ++xx) {
                first += video.at(xx, yy, tt, i);
              }
            }
          }
          CHECK(std::abs(tensors.first_at(x, y, t, i) - first) <= 1e-10);
          for (int j = 0; j < 3; ++j) {
            double second = 0.0;
            for (int tt = 0; tt <= t; ++tt) {
              for (int yy = 0; yy <= y; ++yy) {
                for (int xx = 0; xx <= x; ++xx) {
                  second += static_cast<double>(video.at(xx, yy, tt, i)) *
                            video.at(xx, yy, tt, j);
                }
              }
            }
            CHECK(std::abs(tensors.second_at(x, y, t, i, j) - second) <=
                  1e-10);
          }
        }
      }
    }
  }
}

TEST_CASE("memory budget rejects oversized tensors") {
  FeatureVideo video = FeatureVideo::create({8, 8, 4}, 5);
  IntegralOptions options;
  options.memory_budget_bytes = 1024;
  CHECK_THROWS_AS(build_integral_tensors(video, options), MemoryBudgetError);
}

TEST_CASE("constant features give the floor regularization only") {
  FeatureVideo video = FeatureVideo::create({4, 4, 3}, 2);
  for (float& v : video.data) v = 0.7f;
  const IntegralTensors tensors = build_integral_tensors(video);
  const Window window{1, 1, 0, 3, 3, 2};

  const Matrix raw = raw_region_covariance(tensors, window);
  CHECK(raw.cwiseAbs().maxCoeff() <= 1e-12);

  const Matrix reg = region_covariance(tensors, window);
  CHECK(max_abs_diff(reg, kRegularizationFloor * Matrix::Identity(2, 2)) <=
        1e-12);
}

TEST_CASE("windows with fewer than two samples are rejected") {
  std::mt19937_64 rng(2);
  const FeatureVideo video = random_feature_video(rng, {4, 4, 3}, 2);
  const IntegralTensors tensors = build_integral_tensors(video);
  CHECK_THROWS_AS(raw_region_covariance(tensors, Window{1, 1, 1, 1, 1, 1}),
                  WindowTooSmallError);
  CHECK_THROWS_AS(raw_region_covariance(tensors, Window{0, 0, 0, 4, 1, 1}),
                  ConfigError);
}

TEST_CASE("full-volume window equals the direct covariance") {
  std::mt19937_64 rng(3);
  const Dims dims{6, 5, 4};
  const FeatureVideo video = random_feature_video(rng, dims, 4);
  const IntegralTensors tensors = build_integral_tensors(video);
  const Window full = Window::full(dims);
  CHECK(max_abs_diff(raw_region_covariance(tensors, full),
                     direct_window_covariance(video, full)) <= 1e-8);
}

TEST_CASE("random windows equal the per-window oracle") {
  std::mt19937_64 rng(4);
  const Dims dims{16, 16, 8};
  const FeatureVideo video = random_feature_video(rng, dims, 5);
  const IntegralTensors tensors = build_integral_tensors(video);
  for (int trial = 0; trial < 25; ++trial) {
    const Window w = random_window(rng, dims);
    CHECK(max_abs_diff(raw_region_covariance(tensors, w),
                       direct_window_covariance(video, w)) <= 1e-8);
  }
}

TEST_CASE("window covariance ignores features outside the window") {
  std::mt19937_64 rng(5);
  const Dims dims{8, 8, 4};
  FeatureVideo video = random_feature_video(rng, dims, 3);
  const Window w{2, 2, 1, 5, 5, 2};
  const Matrix before =
      raw_region_covariance(build_integral_tensors(video), w);

  std::uniform_real_distribution<float> uniform(0.0f, 1.0f);
  for (int t = 0; t < dims.length; ++t) {
    for (int y = 0; y < dims.height; ++y) {
      for (int x = 0; x < dims.width; ++x) {
        const bool inside = x >= w.x1 && x <= w.x2 && y >= w.y1 &&
                            y <= w.y2 && t >= w.t1 && t <= w.t2;
        if (!inside) {
          for (int c = 0; c < 3; ++c) video.at(x, y, t, c) = uniform(rng);
        }
      }
    }
  }
  const Matrix after =
      raw_region_covariance(build_integral_tensors(video), w);
  CHECK(max_abs_diff(before, after) <= 1e-10);
}

TEST_CASE("regularized descriptors are symmetric positive definite") {
  std::mt19937_64 rng(6);
  const Dims dims{10, 9, 5};
  const FeatureVideo video = random_feature_video(rng, dims, 4);
  const IntegralTensors tensors = build_integral_tensors(video);
  for (int trial = 0; trial < 20; ++trial) {
    const Window w = random_window(rng, dims);
    const Matrix c = region_covariance(tensors, w);
    const double scale = c.cwiseAbs().maxCoeff();
    CHECK((c - c.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale);
    Eigen::SelfAdjointEigenSolver<Matrix> es(c);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("normalization with a unit-diagonal reference is a no-op") {
  std::mt19937_64 rng(7);
  Matrix region = test_helpers::random_spd(rng, 3);
  Matrix full = test_helpers::random_spd(rng, 3);
  full.diagonal().setOnes();
  CHECK(max_abs_diff(normalize_descriptor(region, full), region) <= 1e-14);
}

TEST_CASE("self-normalization puts ones on the diagonal") {
  std::mt19937_64 rng(8);
  const Matrix c = test_helpers::random_spd(rng, 4);
  const Matrix normalized = normalize_descriptor(c, c);
  for (int i = 0; i < 4; ++i) {
    CHECK(normalized(i, i) == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("normalization rejects non-positive reference diagonals") {
  std::mt19937_64 rng(9);
  const Matrix region = test_helpers::random_spd(rng, 3);
  Matrix full = test_helpers::random_spd(rng, 3);
  full(1, 1) = 0.0;
  CHECK_THROWS_AS(normalize_descriptor(region, full),
                  DegenerateFullDescriptorError);
}

TEST_CASE("per-channel rescaling leaves normalized descriptors unchanged") {
  std::mt19937_64 rng(10);
  const Dims dims{8, 7, 5};
  const int d = 4;
  const FeatureVideo video = random_feature_video(rng, dims, d);

  // powers of two scale float-stored features exactly
  const double scales[d] = {0.25, 1.0, 4.0, 16.0};
  FeatureVideo scaled = video;
  for (int t = 0; t < dims.length; ++t) {
    for (int y = 0; y < dims.height; ++y) {
      for (int x = 0; x < dims.width; ++x) {
        for (int c = 0; c < d; ++c) {
          scaled.at(x, y, t, c) =
              static_cast<float>(video.at(x, y, t, c) * scales[c]);
        }
      }
    }
  }

  const IntegralTensors base = build_integral_tensors(video);
  const IntegralTensors other = build_integral_tensors(scaled);
  const Matrix base_full = region_covariance(base, Window::full(dims));
  const Matrix other_full = region_covariance(other, Window::full(dims));

  for (int trial = 0; trial < 15; ++trial) {
    const Window w = random_window(rng, dims);
    const Matrix lhs =
        normalize_descriptor(region_covariance(base, w), base_full);
    const Matrix rhs =
        normalize_descriptor(region_covariance(other, w), other_full);
    CHECK(max_abs_diff(lhs, rhs) <= 1e-8);
  }
}
