#include "cov3d/integral.hpp"

#include "cov3d/errors.hpp"

#include <algorithm>
#include <string>

namespace cov3d {

IntegralTensors build_integral_tensors(const FeatureVideo& features,
                                       const IntegralOptions& options) {
  const int d = features.channels;
  const Dims dims = features.dims();
  const std::size_t cells = static_cast<std::size_t>(dims.volume());
  const std::size_t doubles =
      cells * static_cast<std::size_t>(d) * static_cast<std::size_t>(1 + d);
  if (doubles * sizeof(double) > options.memory_budget_bytes) {
    throw MemoryBudgetError(
        "integral tensors need " + std::to_string(doubles * sizeof(double)) +
        " bytes, budget is " + std::to_string(options.memory_budget_bytes));
  }

  IntegralTensors t;
  t.dims = dims;
  t.channels = d;
  t.first.resize(cells * static_cast<std::size_t>(d));
  t.second.resize(cells * static_cast<std::size_t>(d) * d);

  // raw values and outer products, then separable prefix passes
  const std::size_t dc = static_cast<std::size_t>(d);
  for (std::size_t cell = 0; cell < cells; ++cell) {
    const float* f = features.data.data() + cell * dc;
    double* p = t.first.data() + cell * dc;
    double* q = t.second.data() + cell * dc * dc;
    for (int i = 0; i < d; ++i) {
      const double fi = f[i];
      p[static_cast<std::size_t>(i)] = fi;
      for (int j = 0; j < d; ++j) {
        q[static_cast<std::size_t>(i) * dc + j] = fi * f[j];
      }
    }
  }

  const std::size_t pc = dc;            // channels in first
  const std::size_t qc = dc * dc;       // channels in second
  const int w = dims.width;
  const int h = dims.height;
  const int n = dims.length;
  auto prefix_pass = [&](std::vector<double>& buf, std::size_t nchan) {
    // along x
    for (int tt = 0; tt < n; ++tt) {
      for (int y = 0; y < h; ++y) {
        double* row =
            buf.data() +
            ((static_cast<std::size_t>(tt) * h + y) * w) * nchan;
        for (int x = 1; x < w; ++x) {
          double* cur = row + static_cast<std::size_t>(x) * nchan;
          const double* prev = cur - nchan;
          for (std::size_t c = 0; c < nchan; ++c) cur[c] += prev[c];
        }
      }
    }
    // along y
    for (int tt = 0; tt < n; ++tt) {
      for (int y = 1; y < h; ++y) {
        double* cur =
            buf.data() +
            ((static_cast<std::size_t>(tt) * h + y) * w) * nchan;
        const double* prev = cur - static_cast<std::size_t>(w) * nchan;
        for (std::size_t c = 0; c < static_cast<std::size_t>(w) * nchan; ++c) {
          cur[c] += prev[c];
        }
      }
    }
    // along t
    const std::size_t plane = static_cast<std::size_t>(w) * h * nchan;
    for (int tt = 1; tt < n; ++tt) {
      double* cur = buf.data() + static_cast<std::size_t>(tt) * plane;
      const double* prev = cur - plane;
      for (std::size_t c = 0; c < plane; ++c) cur[c] += prev[c];
    }
  };
  prefix_pass(t.first, pc);
  prefix_pass(t.second, qc);
  return t;
}

Matrix raw_region_covariance(const IntegralTensors& tensors,
                             const Window& window) {
  if (!window.valid_for(tensors.dims)) {
    throw ConfigError("window out of range");
  }
  const std::int64_t volume = window.volume();
  if (volume < 2) {
    throw WindowTooSmallError("covariance needs at least 2 samples, window has " +
                              std::to_string(volume));
  }
  const int d = tensors.channels;
  const std::size_t dc = static_cast<std::size_t>(d);

  Vector sum = Vector::Zero(d);
  Matrix prod = Matrix::Zero(d, d);

  // 2-D inclusion-exclusion over the (x, y) corners of the temporal
  // slab difference at t2 and t1-1; corners at index -1 contribute
  // nothing because prefix sums below the origin are zero.
  const int corners_x[4] = {window.x2, window.x1 - 1, window.x2,
                            window.x1 - 1};
  const int corners_y[4] = {window.y2, window.y1 - 1, window.y1 - 1,
                            window.y2};
  const double corner_sign[4] = {1.0, 1.0, -1.0, -1.0};

  for (int c = 0; c < 4; ++c) {
    const int x = corners_x[c];
    const int y = corners_y[c];
    if (x < 0 || y < 0) continue;
    for (int which = 0; which < 2; ++which) {
      const int tt = which == 0 ? window.t2 : window.t1 - 1;
      if (tt < 0) continue;
      const double sign = which == 0 ? corner_sign[c] : -corner_sign[c];
      const std::size_t cell = tensors.cell(x, y, tt);
      const double* p = tensors.first.data() + cell * dc;
      const double* q = tensors.second.data() + cell * dc * dc;
      for (int i = 0; i < d; ++i) {
        sum[i] += sign * p[static_cast<std::size_t>(i)];
        for (int j = 0; j < d; ++j) {
          prod(i, j) += sign * q[static_cast<std::size_t>(i) * dc + j];
        }
      }
    }
  }

  const double s = static_cast<double>(volume);
  Matrix cov = (prod - (sum * sum.transpose()) / s) / (s - 1.0);
  cov = 0.5 * (cov + cov.transpose()).eval();
  return cov;
}

Matrix regularize_covariance(const Matrix& covariance) {
  Matrix out = covariance;
  for (int i = 0; i < out.rows(); ++i) {
    const double diag = covariance(i, i);
    // proportional shift whenever the channel carries any variance so
    // that per-channel feature rescaling commutes with regularization;
    // the absolute floor handles exhausted channels only
    out(i, i) += diag > 0.0 ? kRegularizationScale * diag
                            : kRegularizationFloor;
  }
  return out;
}

Matrix region_covariance(const IntegralTensors& tensors,
                         const Window& window) {
  return regularize_covariance(raw_region_covariance(tensors, window));
}

Matrix normalize_descriptor(const Matrix& region_cov,
                            const Matrix& full_cov) {
  const int d = static_cast<int>(region_cov.rows());
  Vector scale(d);
  for (int i = 0; i < d; ++i) {
    const double diag = full_cov(i, i);
    if (!(diag > 0.0)) {
      throw DegenerateFullDescriptorError(
          "full descriptor has non-positive diagonal at channel " +
          std::to_string(i));
    }
    scale[i] = 1.0 / std::sqrt(diag);
  }
  Matrix out = scale.asDiagonal() * region_cov * scale.asDiagonal();
  return 0.5 * (out + out.transpose()).eval();
}

}  // namespace cov3d
