#pragma once

#include <optional>

#include "ihi/cube.hpp"

namespace ihi {

struct PsnrValue {
  double db = 0.0;
  bool infinite = false;  // MSE == 0
};

/// 10·log10(peak² / MSE) over every element; peak defaults to max(ref).
PsnrValue psnr(const Cube& x, const Cube& ref, std::optional<double> peak = std::nullopt);

struct SsimOptions {
  std::size_t window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  std::optional<double> peak;  // dynamic range; defaults to max(ref)
};

/// Gaussian-windowed SSIM per channel over the valid region, averaged over
/// channels and positions.
double ssim(const Cube& x, const Cube& ref, const SsimOptions& options = {});

}  // namespace ihi
