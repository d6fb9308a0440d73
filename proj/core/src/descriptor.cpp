#include "cov3d/descriptor.hpp"

namespace cov3d {

DescriptorSource::DescriptorSource(const Video& video,
                                   const FlowParams& flow_params,
                                   const IntegralOptions& options) {
  const FeatureVideo features = build_feature_video(video, flow_params);
  tensors_ = build_integral_tensors(features, options);
  full_cov_ = region_covariance(tensors_, Window::full(tensors_.dims));
}

Matrix DescriptorSource::descriptor(const Window& window) const {
  return normalize_descriptor(region_covariance(tensors_, window), full_cov_);
}

std::size_t DescriptorSource::memory_bytes() const {
  return (tensors_.first.size() + tensors_.second.size()) * sizeof(double);
}

}  // namespace cov3d
