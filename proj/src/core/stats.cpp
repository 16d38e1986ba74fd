#include "ihi/stats.hpp"

#include <cmath>

#include "ihi/error.hpp"
#include "ihi/parallel.hpp"

namespace ihi {

ColumnStats column_stats(const Cube& cube) {
  require(cube.height() >= 2, Errc::degenerate_axis, "standard deviation needs H >= 2", "H");
  const std::size_t W = cube.width();
  const std::size_t C = cube.channels();
  ColumnStats out{Map2::Zero(W, C), Map2::Zero(W, C)};

  parallel_for(0, W, [&](std::size_t w) {
    std::vector<double> mean(C, 0.0), m2(C, 0.0);
    for (std::size_t h = 0; h < cube.height(); ++h) {
      const auto px = cube.pixel(h, w);
      const double n = static_cast<double>(h + 1);
      for (std::size_t c = 0; c < C; ++c) {
        const double delta = px[c] - mean[c];
        mean[c] += delta / n;
        m2[c] += delta * (px[c] - mean[c]);
      }
    }
    const double denom = static_cast<double>(cube.height() - 1);
    for (std::size_t c = 0; c < C; ++c) {
      out.mean(w, c) = mean[c];
      out.stddev(w, c) = std::sqrt(std::max(0.0, m2[c] / denom));
    }
  });
  return out;
}

Map2 column_mean(const Cube& cube) {
  require(cube.height() >= 1, Errc::degenerate_axis, "mean needs H >= 1", "H");
  Map2 out = Map2::Zero(cube.width(), cube.channels());
  parallel_for(0, cube.width(), [&](std::size_t w) {
    for (std::size_t h = 0; h < cube.height(); ++h) {
      const auto px = cube.pixel(h, w);
      for (std::size_t c = 0; c < cube.channels(); ++c) out(w, c) += px[c];
    }
    out.row(w) /= static_cast<double>(cube.height());
  });
  return out;
}

Map2 spectral_mean(const Cube& cube) {
  require(cube.channels() >= 1, Errc::degenerate_axis, "spectral mean needs C >= 1", "C");
  Map2 out(cube.height(), cube.width());
  for (std::size_t h = 0; h < cube.height(); ++h)
    for (std::size_t w = 0; w < cube.width(); ++w) {
      double s = 0.0;
      for (double v : cube.pixel(h, w)) s += v;
      out(h, w) = s / static_cast<double>(cube.channels());
    }
  return out;
}

}  // namespace ihi
