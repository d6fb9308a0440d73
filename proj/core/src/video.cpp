#include "cov3d/video.hpp"

#include "cov3d/errors.hpp"

#include <cmath>

namespace cov3d {

Video Video::create(int width, int height, int length) {
  if (width < 2 || height < 2 || length < 2) {
    throw ConfigError("video needs at least 2 samples per axis, got " +
                      std::to_string(width) + "x" + std::to_string(height) +
                      "x" + std::to_string(length));
  }
  Video v;
  v.width = width;
  v.height = height;
  v.length = length;
  v.data.assign(static_cast<std::size_t>(width) * height * length, 0.0f);
  return v;
}

bool Video::finite() const {
  for (float value : data) {
    if (!std::isfinite(value)) return false;
  }
  return true;
}

FeatureVideo FeatureVideo::create(const Dims& dims, int channels) {
  if (channels < 1) throw ConfigError("feature video needs channels >= 1");
  FeatureVideo f;
  f.width = dims.width;
  f.height = dims.height;
  f.length = dims.length;
  f.channels = channels;
  f.data.assign(static_cast<std::size_t>(dims.volume()) * channels, 0.0f);
  return f;
}

FlowField FlowField::create(const Dims& dims) {
  FlowField f;
  f.width = dims.width;
  f.height = dims.height;
  f.length = dims.length;
  f.u.assign(static_cast<std::size_t>(dims.volume()), 0.0f);
  f.v.assign(static_cast<std::size_t>(dims.volume()), 0.0f);
  return f;
}

}  // namespace cov3d
