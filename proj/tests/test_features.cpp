#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cov3d/features.hpp>

#include "helpers.hpp"

#include <cmath>
#include <random>

using namespace cov3d;

namespace {

Video constant_video(const Dims& dims, float value) {
  Video v = Video::create(dims.width, dims.height, dims.length);
  for (float& p : v.data) p = value;
  return v;
}

// bright gaussian blob on a dark background, translating at a constant
// velocity, wrapped into [0, 1]
Video blob_video(const Dims& dims, double x0, double y0, double sigma,
                 double vx, double vy) {
  Video v = Video::create(dims.width, dims.height, dims.length);
  for (int t = 0; t < dims.length; ++t) {
    const double cx = x0 + vx * t;
    const double cy = y0 + vy * t;
    for (int y = 0; y < dims.height; ++y) {
      for (int x = 0; x < dims.width; ++x) {
        const double dx = x - cx;
        const double dy = y - cy;
        const double value =
            0.1 + 0.8 * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
        v.at(x, y, t) = static_cast<float>(value);
      }
    }
  }
  return v;
}

Video mirror_x(const Video& in) {
  Video out = Video::create(in.width, in.height, in.length);
  for (int t = 0; t < in.length; ++t) {
    for (int y = 0; y < in.height; ++y) {
      for (int x = 0; x < in.width; ++x) {
        out.at(x, y, t) = in.at(in.width - 1 - x, y, t);
      }
    }
  }
  return out;
}

Video reverse_t(const Video& in) {
  Video out = Video::create(in.width, in.height, in.length);
  for (int t = 0; t < in.length; ++t) {
    for (int y = 0; y < in.height; ++y) {
      for (int x = 0; x < in.width; ++x) {
        out.at(x, y, t) = in.at(x, y, in.length - 1 - t);
      }
    }
  }
  return out;
}

}  // namespace

TEST_CASE("gradient features of a linear ramp") {
  const int w = 8;
  Video v = Video::create(w, 6, 2);
  for (int t = 0; t < v.length; ++t) {
    for (int y = 0; y < v.height; ++y) {
      for (int x = 0; x < w; ++x) {
        v.at(x, y, t) = static_cast<float>(x) / w;
      }
    }
  }
  for (int y = 1; y < v.height - 1; ++y) {
    for (int x = 1; x < w - 1; ++x) {
      const auto g = gradient_features(v, x, y, 0);
      CHECK(g[0] == doctest::Approx(1.0 / w).epsilon(1e-6));
      CHECK(g[1] == doctest::Approx(0.0));
      CHECK(g[2] == doctest::Approx(0.0).epsilon(1e-6));
      CHECK(g[3] == doctest::Approx(0.0));
      CHECK(g[4] == doctest::Approx(1.0 / w).epsilon(1e-6));
      CHECK(g[5] == doctest::Approx(0.0));
    }
  }
}

TEST_CASE("gradient features of a constant image are all zero") {
  const Video v = constant_video({6, 6, 2}, 0.5f);
  for (int y = 0; y < 6; ++y) {
    for (int x = 0; x < 6; ++x) {
      const auto g = gradient_features(v, x, y, 1);
      for (double value : g) CHECK(value == 0.0);
    }
  }
}

TEST_CASE("second derivative of a quadratic ramp is twice the grid step squared") {
  const int w = 16;
  const double h = 1.0 / (w - 1);
  Video v = Video::create(w, 4, 2);
  for (int t = 0; t < v.length; ++t) {
    for (int y = 0; y < v.height; ++y) {
      for (int x = 0; x < w; ++x) {
        const double value = (x * h) * (x * h);
        v.at(x, y, t) = static_cast<float>(value);
      }
    }
  }
  // oracle: centred second difference of the analytic profile
  auto oracle = [&](int x) {
    const double f = [&](int xi) { return (xi * h) * (xi * h); }(x);
    const double fp = ((x + 1) * h) * ((x + 1) * h);
    const double fm = ((x - 1) * h) * ((x - 1) * h);
    return std::abs(fp - 2.0 * f + fm);
  };
  for (int x = 1; x < w - 1; ++x) {
    const auto g = gradient_features(v, x, 2, 0);
    CHECK(g[2] == doctest::Approx(2.0 * h * h).epsilon(1e-4));
    CHECK(g[2] == doctest::Approx(oracle(x)).epsilon(1e-4));
  }
}

TEST_CASE("gradient features agree between an image and its complement") {
  // 1/256 quantized intensities make the complement exact in float
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> level(0, 256);
  Video v = Video::create(9, 7, 2);
  for (float& p : v.data) p = static_cast<float>(level(rng)) / 256.0f;
  Video complement = v;
  for (float& p : complement.data) p = 1.0f - p;

  for (int y = 0; y < v.height; ++y) {
    for (int x = 0; x < v.width; ++x) {
      const auto a = gradient_features(v, x, y, 0);
      const auto b = gradient_features(complement, x, y, 0);
      for (int c = 0; c < 6; ++c) CHECK(a[c] == b[c]);
    }
  }
}

TEST_CASE("flow of a static video is zero") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<float> uniform(0.0f, 1.0f);
  Video v = Video::create(8, 8, 4);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      const float value = uniform(rng);
      for (int t = 0; t < 4; ++t) v.at(x, y, t) = value;
    }
  }
  const FlowField flow = compute_flow(v);
  for (float u : flow.u) CHECK(std::abs(u) < 1e-12);
  for (float value : flow.v) CHECK(std::abs(value) < 1e-12);
}

TEST_CASE("flow of a translating blob recovers the motion direction") {
  const Dims dims{48, 32, 5};
  const Video v = blob_video(dims, 12.0, 16.0, 5.0, 2.0, 0.0);
  const FlowField flow = compute_flow(v);

  double sum_u = 0.0;
  double sum_v = 0.0;
  int count = 0;
  for (int t = 0; t + 1 < dims.length; ++t) {
    const double cx = 12.0 + 2.0 * t;
    for (int y = 0; y < dims.height; ++y) {
      for (int x = 0; x < dims.width; ++x) {
        const double dx = x - cx;
        const double dy = y - 16.0;
        if (dx * dx + dy * dy <= 5.0 * 5.0) {
          sum_u += flow.u_at(x, y, t);
          sum_v += flow.v_at(x, y, t);
          ++count;
        }
      }
    }
  }
  REQUIRE(count > 0);
  const double mean_u = sum_u / count;
  const double mean_v = sum_v / count;
  CHECK(mean_u >= 1.0);
  CHECK(mean_u <= 3.0);
  CHECK(std::abs(mean_v) <= 0.5);
}

TEST_CASE("mirroring the video negates u and keeps v") {
  const Dims dims{24, 20, 4};
  const Video v = blob_video(dims, 8.0, 10.0, 3.0, 1.5, 0.5);
  const FlowField flow = compute_flow(v);
  const FlowField mirrored = compute_flow(mirror_x(v));
  for (int t = 0; t < dims.length; ++t) {
    for (int y = 0; y < dims.height; ++y) {
      for (int x = 0; x < dims.width; ++x) {
        const int mx = dims.width - 1 - x;
        CHECK(std::abs(mirrored.u_at(mx, y, t) + flow.u_at(x, y, t)) <= 1e-6);
        CHECK(std::abs(mirrored.v_at(mx, y, t) - flow.v_at(x, y, t)) <= 1e-6);
      }
    }
  }
}

TEST_CASE("reversing time negates the flow of a rigid translation") {
  const Dims dims{24, 20, 5};
  const Video v = blob_video(dims, 7.0, 9.0, 3.0, 1.0, 0.5);
  const FlowField forward = compute_flow(v);
  const FlowField backward = compute_flow(reverse_t(v));
  // the reversed clip pairs frame t with t+1 = original pair (s+1, s)
  for (int t = 0; t + 1 < dims.length; ++t) {
    const int s = dims.length - 2 - t;
    for (int y = 0; y < dims.height; ++y) {
      for (int x = 0; x < dims.width; ++x) {
        CHECK(std::abs(backward.u_at(x, y, t) + forward.u_at(x, y, s)) <=
              1e-6);
        CHECK(std::abs(backward.v_at(x, y, t) + forward.v_at(x, y, s)) <=
              1e-6);
      }
    }
  }
}

TEST_CASE("flow features of analytic fields") {
  const Dims dims{8, 8, 3};
  FlowField uniform = FlowField::create(dims);
  for (float& u : uniform.u) u = 1.25f;
  for (float& v : uniform.v) v = -0.5f;
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      const auto o = flow_features(uniform, x, y, 1);
      CHECK(o[0] == doctest::Approx(1.25));
      CHECK(o[1] == doctest::Approx(-0.5));
      for (int c = 2; c < 6; ++c) CHECK(o[c] == doctest::Approx(0.0));
    }
  }

  FlowField radial = FlowField::create(dims);
  FlowField rotational = FlowField::create(dims);
  for (int t = 0; t < dims.length; ++t) {
    for (int y = 0; y < 8; ++y) {
      for (int x = 0; x < 8; ++x) {
        radial.u[radial.index(x, y, t)] = static_cast<float>(x);
        radial.v[radial.index(x, y, t)] = static_cast<float>(y);
        rotational.u[rotational.index(x, y, t)] = static_cast<float>(-y);
        rotational.v[rotational.index(x, y, t)] = static_cast<float>(x);
      }
    }
  }
  for (int y = 1; y < 7; ++y) {
    for (int x = 1; x < 7; ++x) {
      const auto r = flow_features(radial, x, y, 1);
      CHECK(r[4] == doctest::Approx(2.0));
      CHECK(r[5] == doctest::Approx(0.0));
      const auto c = flow_features(rotational, x, y, 1);
      CHECK(c[4] == doctest::Approx(0.0));
      CHECK(c[5] == doctest::Approx(2.0));
    }
  }
}

TEST_CASE("feature video assembles coordinates and per-part features") {
  const Dims dims{10, 8, 4};
  const Video v = blob_video(dims, 4.0, 4.0, 2.0, 1.0, 0.0);
  const FeatureVideo features = build_feature_video(v);
  const FlowField flow = compute_flow(v);
  REQUIRE(features.channels == kFeatureCount);

  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> dx(0, dims.width - 1);
  std::uniform_int_distribution<int> dy(0, dims.height - 1);
  std::uniform_int_distribution<int> dt(0, dims.length - 1);
  for (int trial = 0; trial < 200; ++trial) {
    const int x = dx(rng), y = dy(rng), t = dt(rng);
    CHECK(features.at(x, y, t, kChanX) == static_cast<float>(x));
    CHECK(features.at(x, y, t, kChanY) == static_cast<float>(y));
    CHECK(features.at(x, y, t, kChanT) == static_cast<float>(t));
    const auto g = gradient_features(v, x, y, t);
    for (int c = 0; c < 6; ++c) {
      CHECK(features.at(x, y, t, kChanGradX + c) ==
            static_cast<float>(g[static_cast<std::size_t>(c)]));
    }
    const auto o = flow_features(flow, x, y, t);
    for (int c = 0; c < 6; ++c) {
      CHECK(features.at(x, y, t, kChanFlowU + c) ==
            static_cast<float>(o[static_cast<std::size_t>(c)]));
    }
    CHECK(features.at(x, y, t, kChanFlowU) ==
          flow.u_at(x, y, t));  // channel 9 carries u
  }
}

TEST_CASE("constant videos produce zero gradient and flow channels") {
  const Video v = constant_video({4, 4, 3}, 0.3f);
  const FeatureVideo features = build_feature_video(v);
  for (int t = 0; t < 3; ++t) {
    for (int y = 0; y < 4; ++y) {
      for (int x = 0; x < 4; ++x) {
        for (int c = kChanGradX; c < kFeatureCount; ++c) {
          CHECK(features.at(x, y, t, c) == 0.0f);
        }
      }
    }
  }
}

TEST_CASE("all feature outputs are finite on random videos") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<float> uniform(0.0f, 1.0f);
  Video v = Video::create(12, 10, 4);
  for (float& p : v.data) p = uniform(rng);
  const FeatureVideo features = build_feature_video(v);
  for (float value : features.data) CHECK(std::isfinite(value));
}
