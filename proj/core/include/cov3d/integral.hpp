#pragma once

#include "cov3d/types.hpp"
#include "cov3d/video.hpp"

#include <cstddef>
#include <vector>

namespace cov3d {

/// Covariance regularization: each diagonal entry i receives a shift of
/// kRegularizationScale * C(i,i) when the channel carries variance, and
/// kRegularizationFloor when it is exhausted (C(i,i) <= 0). The shift is
/// proportional to the channel's own variance, so descriptors of
/// per-channel rescaled features stay equivalent after normalization,
/// and the normalized descriptor gets a uniform ridge of about
/// kRegularizationScale / (1 + kRegularizationScale) on its spectrum.
inline constexpr double kRegularizationScale = 1e-6;
inline constexpr double kRegularizationFloor = 1e-10;

struct IntegralOptions {
  /// Upper bound for the tensor allocation (both orders together).
  std::size_t memory_budget_bytes = std::size_t{4} << 30;
};

/// First-order (per channel) and second-order (per channel pair)
/// inclusive prefix sums over the feature video. The second-order
/// tensor stores the full d x d block per cell; it is symmetric by
/// construction.
struct IntegralTensors {
  Dims dims;
  int channels = 0;
  std::vector<double> first;   // ((t*H + y)*W + x)*d + i
  std::vector<double> second;  // ((t*H + y)*W + x)*d*d + i*d + j

  std::size_t cell(int x, int y, int t) const {
    return (static_cast<std::size_t>(t) * dims.height + y) * dims.width + x;
  }
  double first_at(int x, int y, int t, int i) const {
    return first[cell(x, y, t) * channels + i];
  }
  double second_at(int x, int y, int t, int i, int j) const {
    return second[(cell(x, y, t) * channels + i) * channels + j];
  }
};

/// Single pass over the feature video, O(d^2 W H T). Throws
/// MemoryBudgetError when the tensors would exceed the configured
/// budget.
IntegralTensors build_integral_tensors(const FeatureVideo& features,
                                       const IntegralOptions& options = {});

/// Sample covariance (1/(S-1)) of the feature vectors inside the
/// window, computed from the two tensors alone: temporal slice
/// differences at t2 and t1-1 followed by 2-D inclusion-exclusion over
/// the four (x,y) corners. Indices at -1 contribute zero. The result is
/// symmetrized but not regularized. Throws WindowTooSmallError when the
/// window holds fewer than two samples.
Matrix raw_region_covariance(const IntegralTensors& tensors,
                             const Window& window);

/// Diagonal shift described at kRegularizationScale; the shared
/// post-processing step between the fast path and any reference
/// computation.
Matrix regularize_covariance(const Matrix& covariance);

/// regularize_covariance(raw_region_covariance(...)): strictly positive
/// definite descriptor of the window.
Matrix region_covariance(const IntegralTensors& tensors,
                         const Window& window);

/// diag(full)^-1/2 * region * diag(full)^-1/2. Throws
/// DegenerateFullDescriptorError when full has a non-positive diagonal
/// entry (cannot happen for regularized input).
Matrix normalize_descriptor(const Matrix& region_cov, const Matrix& full_cov);

}  // namespace cov3d
