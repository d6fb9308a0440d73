#pragma once

#include "cov3d/types.hpp"

#include <vector>

namespace cov3d {

/// Candidate window grid: per axis, origins and extents advance in
/// steps of max(1, floor(step_frac * size)); extents start at
/// max(1, ceil(min_frac * size)) and the full size is always included.
/// The result is deduplicated, sorted lexicographically, and always
/// contains the full-volume window. Throws ConfigError for fractions
/// outside (0, 1] and EmptyGridError if no window survives.
std::vector<Window> enumerate_windows(const Dims& dims, double min_frac,
                                      double step_frac);

}  // namespace cov3d
