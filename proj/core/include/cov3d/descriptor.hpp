#pragma once

#include "cov3d/features.hpp"
#include "cov3d/integral.hpp"

namespace cov3d {

/// Per-video descriptor pipeline: feature video -> integral tensors ->
/// normalized window covariances. Immutable after construction;
/// descriptor() is safe to call concurrently.
class DescriptorSource {
 public:
  DescriptorSource(const Video& video, const FlowParams& flow_params = {},
                   const IntegralOptions& options = {});

  const Dims& dims() const { return tensors_.dims; }
  int channels() const { return tensors_.channels; }

  /// Regularized covariance of the full volume (the normalizer).
  const Matrix& full_covariance() const { return full_cov_; }

  /// Normalized, regularized covariance descriptor of the window.
  Matrix descriptor(const Window& window) const;

  /// Approximate heap footprint, for cache accounting.
  std::size_t memory_bytes() const;

 private:
  IntegralTensors tensors_;
  Matrix full_cov_;
};

}  // namespace cov3d
