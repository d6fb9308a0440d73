#include "cov3d/windows.hpp"

#include "cov3d/errors.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace cov3d {

namespace {

struct AxisGrid {
  std::vector<int> extents;
  int step = 1;
};

AxisGrid axis_grid(int size, double min_frac, double step_frac) {
  AxisGrid grid;
  grid.step = std::max(1, static_cast<int>(std::floor(step_frac * size)));
  const int min_extent =
      std::max(1, static_cast<int>(std::ceil(min_frac * size)));
  for (int extent = grid.step; extent <= size; extent += grid.step) {
    if (extent >= min_extent) grid.extents.push_back(extent);
  }
  if (grid.extents.empty() || grid.extents.back() != size) {
    if (size >= min_extent) grid.extents.push_back(size);
  }
  return grid;
}

}  // namespace

std::vector<Window> enumerate_windows(const Dims& dims, double min_frac,
                                      double step_frac) {
  if (!(min_frac > 0.0) || min_frac > 1.0 || !(step_frac > 0.0) ||
      step_frac > 1.0) {
    throw ConfigError("window fractions must lie in (0, 1]");
  }
  const AxisGrid gx = axis_grid(dims.width, min_frac, step_frac);
  const AxisGrid gy = axis_grid(dims.height, min_frac, step_frac);
  const AxisGrid gt = axis_grid(dims.length, min_frac, step_frac);

  std::vector<Window> windows;
  for (int ex : gx.extents) {
    for (int x = 0; x + ex <= dims.width; x += gx.step) {
      for (int ey : gy.extents) {
        for (int y = 0; y + ey <= dims.height; y += gy.step) {
          for (int et : gt.extents) {
            for (int t = 0; t + et <= dims.length; t += gt.step) {
              windows.push_back(
                  {x, y, t, x + ex - 1, y + ey - 1, t + et - 1});
            }
          }
        }
      }
    }
  }
  windows.push_back(Window::full(dims));

  std::sort(windows.begin(), windows.end());
  windows.erase(std::unique(windows.begin(), windows.end()), windows.end());
  if (windows.empty()) {
    throw EmptyGridError("window enumeration produced no windows");
  }
  return windows;
}

}  // namespace cov3d
