#pragma once

#include "cov3d/video.hpp"

#include <array>

namespace cov3d {

/// Number of channels produced by build_feature_video.
inline constexpr int kFeatureCount = 15;

// Channel layout of the feature video (stable, serialized models rely
// on it):
//   0  x            raw pixel column
//   1  y            raw pixel row
//   2  t            raw frame index
//   3  |Ix|   4 |Iy|   5 |Ixx|   6 |Iyy|
//   7  sqrt(Ix^2+Iy^2)        gradient magnitude
//   8  atan(|Iy|/|Ix|)        gradient orientation, 0 at zero gradient
//   9  u           10 v       flow components
//   11 du/dt       12 dv/dt   temporal flow derivatives
//   13 du/dx+dv/dy            divergence
//   14 dv/dx-du/dy            vorticity
enum FeatureChannel : int {
  kChanX = 0,
  kChanY = 1,
  kChanT = 2,
  kChanGradX = 3,
  kChanGradY = 4,
  kChanGradXX = 5,
  kChanGradYY = 6,
  kChanGradMag = 7,
  kChanGradOrient = 8,
  kChanFlowU = 9,
  kChanFlowV = 10,
  kChanFlowUt = 11,
  kChanFlowVt = 12,
  kChanFlowDiv = 13,
  kChanFlowCurl = 14,
};

/// Horn-Schunck style global optical flow. alpha^2 (the smoothness
/// weight) is alpha_scale times the squared intensity dynamic range of
/// the video; the iteration count is fixed, so results are
/// deterministic.
struct FlowParams {
  double alpha_scale = 0.01;
  int iterations = 100;
};

/// First/second order intensity gradients plus magnitude and
/// orientation at one pixel. Centred differences, replicated borders.
std::array<double, 6> gradient_features(const Video& video, int x, int y,
                                        int t);

FlowField compute_flow(const Video& video, const FlowParams& params = {});

/// [u, v, du/dt, dv/dt, divergence, vorticity] at one pixel.
std::array<double, 6> flow_features(const FlowField& flow, int x, int y,
                                    int t);

/// Assembles the 15-channel feature video [x y t gradients flow].
FeatureVideo build_feature_video(const Video& video,
                                 const FlowParams& params = {});

}  // namespace cov3d
