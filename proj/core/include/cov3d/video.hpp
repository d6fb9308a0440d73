#pragma once

#include "cov3d/types.hpp"

#include <cstddef>
#include <vector>

namespace cov3d {

/// Greyscale image sequence with intensities in [0, 1].
/// Layout: frame-major, row-major inside a frame: ((t*H + y)*W + x).
struct Video {
  int width = 0;
  int height = 0;
  int length = 0;
  std::vector<float> data;

  /// Zero-filled video; requires at least 2 samples per axis so that
  /// centred derivatives have neighbours.
  static Video create(int width, int height, int length);

  Dims dims() const { return {width, height, length}; }

  std::size_t index(int x, int y, int t) const {
    return (static_cast<std::size_t>(t) * height + y) * width + x;
  }
  float at(int x, int y, int t) const { return data[index(x, y, t)]; }
  float& at(int x, int y, int t) { return data[index(x, y, t)]; }

  /// True when every intensity is finite.
  bool finite() const;
};

/// Dense per-pixel feature vectors.
/// Layout: ((t*H + y)*W + x)*channels + c, features innermost.
struct FeatureVideo {
  int width = 0;
  int height = 0;
  int length = 0;
  int channels = 0;
  std::vector<float> data;

  static FeatureVideo create(const Dims& dims, int channels);

  Dims dims() const { return {width, height, length}; }

  std::size_t index(int x, int y, int t, int c) const {
    return ((static_cast<std::size_t>(t) * height + y) * width + x) *
               channels + c;
  }
  float at(int x, int y, int t, int c) const {
    return data[index(x, y, t, c)];
  }
  float& at(int x, int y, int t, int c) {
    return data[index(x, y, t, c)];
  }
};

/// Dense optical flow, pixels per frame. u is horizontal, v vertical.
/// Same spatial layout as Video; the field at frame t describes motion
/// from frame t to t+1 (the last frame copies the previous one).
struct FlowField {
  int width = 0;
  int height = 0;
  int length = 0;
  std::vector<float> u;
  std::vector<float> v;

  static FlowField create(const Dims& dims);

  std::size_t index(int x, int y, int t) const {
    return (static_cast<std::size_t>(t) * height + y) * width + x;
  }
  float u_at(int x, int y, int t) const { return u[index(x, y, t)]; }
  float v_at(int x, int y, int t) const { return v[index(x, y, t)]; }
};

}  // namespace cov3d
