#pragma once

#include "ihi/cube.hpp"

namespace ihi {

struct ColumnStats {
  Map2 mean;    // W x C
  Map2 stddev;  // W x C, unbiased (n - 1)
};

/// Mean and standard deviation over the H axis for every (w, c). Welford
/// updates run in row order, so results do not depend on the thread count.
ColumnStats column_stats(const Cube& cube);

/// Mean over the H axis only; valid for H >= 1.
Map2 column_mean(const Cube& cube);

/// Mean over the channel axis for every pixel (H x W).
Map2 spectral_mean(const Cube& cube);

}  // namespace ihi
