#include "cov3d/features.hpp"

#include "cov3d/errors.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace cov3d {

namespace {

inline int clamp_index(int i, int n) { return std::clamp(i, 0, n - 1); }

// Centred first/second differences with replicated borders, frame t.
struct FrameStencil {
  const Video& video;
  int t;

  double at(int x, int y) const {
    return video.at(clamp_index(x, video.width), clamp_index(y, video.height),
                    t);
  }
  double dx(int x, int y) const { return 0.5 * (at(x + 1, y) - at(x - 1, y)); }
  double dy(int x, int y) const { return 0.5 * (at(x, y + 1) - at(x, y - 1)); }
  double dxx(int x, int y) const {
    return at(x + 1, y) - 2.0 * at(x, y) + at(x - 1, y);
  }
  double dyy(int x, int y) const {
    return at(x, y + 1) - 2.0 * at(x, y) + at(x, y - 1);
  }
};

// Horn-Schunck weighted neighbourhood average: 1/6 for the 4-neighbours,
// 1/12 for the diagonals, replicated borders.
double local_average(const std::vector<double>& field, int x, int y, int w,
                     int h) {
  auto value = [&](int xi, int yi) {
    return field[static_cast<std::size_t>(clamp_index(yi, h)) * w +
                 clamp_index(xi, w)];
  };
  return (value(x - 1, y) + value(x + 1, y) + value(x, y - 1) +
          value(x, y + 1)) /
             6.0 +
         (value(x - 1, y - 1) + value(x + 1, y - 1) + value(x - 1, y + 1) +
          value(x + 1, y + 1)) /
             12.0;
}

}  // namespace

std::array<double, 6> gradient_features(const Video& video, int x, int y,
                                        int t) {
  FrameStencil f{video, t};
  const double ix = f.dx(x, y);
  const double iy = f.dy(x, y);
  const double ixx = f.dxx(x, y);
  const double iyy = f.dyy(x, y);
  const double ax = std::abs(ix);
  const double ay = std::abs(iy);
  const double magnitude = std::sqrt(ix * ix + iy * iy);
  // atan2 on the absolute values equals atan(|iy|/|ix|) and is 0 at a
  // zero gradient.
  const double orientation = (ax == 0.0 && ay == 0.0)
                                 ? 0.0
                                 : std::atan2(ay, ax);
  return {ax, ay, std::abs(ixx), std::abs(iyy), magnitude, orientation};
}

FlowField compute_flow(const Video& video, const FlowParams& params) {
  FlowField flow = FlowField::create(video.dims());
  const int w = video.width;
  const int h = video.height;
  const std::size_t plane = static_cast<std::size_t>(w) * h;

  float lo = video.data[0];
  float hi = video.data[0];
  for (float value : video.data) {
    lo = std::min(lo, value);
    hi = std::max(hi, value);
  }
  const double range = static_cast<double>(hi) - lo;
  if (range == 0.0) return flow;  // no contrast, no recoverable motion
  const double alpha2 = params.alpha_scale * range * range;

  std::vector<double> ex(plane), ey(plane), et(plane);
  std::vector<double> u(plane), v(plane), ubar(plane), vbar(plane);

  for (int t = 0; t + 1 < video.length; ++t) {
    FrameStencil cur{video, t};
    FrameStencil nxt{video, t + 1};
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        // spatial derivatives averaged over both frames keep the
        // estimate symmetric under swapping the frame pair
        ex[i] = 0.5 * (cur.dx(x, y) + nxt.dx(x, y));
        ey[i] = 0.5 * (cur.dy(x, y) + nxt.dy(x, y));
        et[i] = nxt.at(x, y) - cur.at(x, y);
      }
    }
    std::fill(u.begin(), u.end(), 0.0);
    std::fill(v.begin(), v.end(), 0.0);
    for (int iter = 0; iter < params.iterations; ++iter) {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const std::size_t i = static_cast<std::size_t>(y) * w + x;
          ubar[i] = local_average(u, x, y, w, h);
          vbar[i] = local_average(v, x, y, w, h);
        }
      }
      for (std::size_t i = 0; i < plane; ++i) {
        const double denom = alpha2 + ex[i] * ex[i] + ey[i] * ey[i];
        const double rate = (ex[i] * ubar[i] + ey[i] * vbar[i] + et[i]) /
                            denom;
        u[i] = ubar[i] - ex[i] * rate;
        v[i] = vbar[i] - ey[i] * rate;
      }
    }
    float* uout = flow.u.data() + static_cast<std::size_t>(t) * plane;
    float* vout = flow.v.data() + static_cast<std::size_t>(t) * plane;
    for (std::size_t i = 0; i < plane; ++i) {
      uout[i] = static_cast<float>(u[i]);
      vout[i] = static_cast<float>(v[i]);
    }
  }

  // last frame copies the previous field
  const std::size_t last = static_cast<std::size_t>(video.length - 1) * plane;
  const std::size_t prev = static_cast<std::size_t>(video.length - 2) * plane;
  std::copy_n(flow.u.begin() + prev, plane, flow.u.begin() + last);
  std::copy_n(flow.v.begin() + prev, plane, flow.v.begin() + last);
  return flow;
}

std::array<double, 6> flow_features(const FlowField& flow, int x, int y,
                                    int t) {
  auto uval = [&](int xi, int yi, int ti) {
    return static_cast<double>(flow.u_at(clamp_index(xi, flow.width),
                                         clamp_index(yi, flow.height),
                                         clamp_index(ti, flow.length)));
  };
  auto vval = [&](int xi, int yi, int ti) {
    return static_cast<double>(flow.v_at(clamp_index(xi, flow.width),
                                         clamp_index(yi, flow.height),
                                         clamp_index(ti, flow.length)));
  };
  const double u = uval(x, y, t);
  const double v = vval(x, y, t);
  const double ut = 0.5 * (uval(x, y, t + 1) - uval(x, y, t - 1));
  const double vt = 0.5 * (vval(x, y, t + 1) - vval(x, y, t - 1));
  const double ux = 0.5 * (uval(x + 1, y, t) - uval(x - 1, y, t));
  const double uy = 0.5 * (uval(x, y + 1, t) - uval(x, y - 1, t));
  const double vx = 0.5 * (vval(x + 1, y, t) - vval(x - 1, y, t));
  const double vy = 0.5 * (vval(x, y + 1, t) - vval(x, y - 1, t));
  return {u, v, ut, vt, ux + vy, vx - uy};
}

FeatureVideo build_feature_video(const Video& video,
                                 const FlowParams& params) {
  if (!video.finite()) throw ConfigError("video contains non-finite pixels");
  FeatureVideo features = FeatureVideo::create(video.dims(), kFeatureCount);
  const FlowField flow = compute_flow(video, params);
  for (int t = 0; t < video.length; ++t) {
    for (int y = 0; y < video.height; ++y) {
      for (int x = 0; x < video.width; ++x) {
        float* out = &features.at(x, y, t, 0);
        out[kChanX] = static_cast<float>(x);
        out[kChanY] = static_cast<float>(y);
        out[kChanT] = static_cast<float>(t);
        const auto g = gradient_features(video, x, y, t);
        for (int c = 0; c < 6; ++c) {
          out[kChanGradX + c] = static_cast<float>(g[static_cast<std::size_t>(c)]);
        }
        const auto o = flow_features(flow, x, y, t);
        for (int c = 0; c < 6; ++c) {
          out[kChanFlowU + c] = static_cast<float>(o[static_cast<std::size_t>(c)]);
        }
      }
    }
  }
  return features;
}

}  // namespace cov3d
