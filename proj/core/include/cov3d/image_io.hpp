#pragma once

#include <string>
#include <vector>

namespace cov3d {

/// Single greyscale frame, intensities in [0, 1], row-major.
struct Frame {
  int width = 0;
  int height = 0;
  std::vector<float> pixels;

  float at(int x, int y) const {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }
  float& at(int x, int y) {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }
};

/// Reads a binary PGM (P5) or 8-bit PNG frame. PNG colour images are
/// converted to grey with Rec. 601 luma. Throws CorruptFrameError on
/// malformed input and IoError when the file cannot be opened.
Frame load_frame(const std::string& path);

/// Writes an 8-bit binary PGM; values are clamped to [0, 1] and
/// rounded.
void save_pgm(const std::string& path, const Frame& frame);

/// Bilinear resampling with pixel-center alignment and edge clamping.
Frame resize_bilinear(const Frame& frame, int out_width, int out_height);

/// Crop to inclusive bounds [x1, x2] x [y1, y2].
Frame crop_frame(const Frame& frame, int x1, int y1, int x2, int y2);

}  // namespace cov3d
