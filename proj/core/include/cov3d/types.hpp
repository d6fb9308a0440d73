#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <tuple>

namespace cov3d {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Spatio-temporal extent of a video volume, in pixels and frames.
struct Dims {
  int width = 0;
  int height = 0;
  int length = 0;

  std::int64_t volume() const {
    return static_cast<std::int64_t>(width) * height * length;
  }
  bool operator==(const Dims&) const = default;
};

/// Axis-aligned spatio-temporal box with inclusive integer bounds.
struct Window {
  int x1 = 0, y1 = 0, t1 = 0;
  int x2 = 0, y2 = 0, t2 = 0;

  std::int64_t volume() const {
    return static_cast<std::int64_t>(x2 - x1 + 1) *
           (y2 - y1 + 1) * (t2 - t1 + 1);
  }

  bool valid_for(const Dims& dims) const {
    return 0 <= x1 && x1 <= x2 && x2 < dims.width &&
           0 <= y1 && y1 <= y2 && y2 < dims.height &&
           0 <= t1 && t1 <= t2 && t2 < dims.length;
  }

  static Window full(const Dims& dims) {
    return {0, 0, 0, dims.width - 1, dims.height - 1, dims.length - 1};
  }

  bool operator==(const Window&) const = default;
  auto operator<=>(const Window& o) const {
    return std::tie(x1, y1, t1, x2, y2, t2) <=>
           std::tie(o.x1, o.y1, o.t1, o.x2, o.y2, o.t2);
  }
};

}  // namespace cov3d
