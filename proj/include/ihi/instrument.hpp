#pragma once

#include <cstdint>

#include "ihi/cube.hpp"
#include "ihi/params.hpp"
#include "ihi/profile.hpp"

namespace ihi {

/// Knobs for a synthetic ground-truth instrument. Spreads are relative.
struct SyntheticInstrumentOptions {
  std::uint64_t seed = 1;
  double gain = 1.5;
  double gain_stripe = 0.08;
  double gain_jitter = 0.02;
  double dark = 100.0;
  double dark_stripe = 0.1;
  double read_noise = 5.0;
  double read_noise_stripe = 0.4;
  double phase_rad = 0.15;
  double phase_slope_rad = 0.1;
  double response_stripe = 0.06;
  double response_jitter = 0.03;
  double scan_distortion = 0.08;
  /// β = margin · N · max|A|.
  double background_margin = 1.1;
  double e = 0.1;
};

/// Ground truth for closed-loop experiments: the parameter set plus the two
/// factors of M (sensor non-uniformity and scan distortion) that calibration
/// captures observe separately.
struct SyntheticInstrument {
  DegradationParams params;
  Map2 relative_response;  // M_R
  Map2 scan_response;      // M_A, mean 1 per column
};

SyntheticInstrument synthetic_instrument(const InstrumentProfile& profile,
                                         const SyntheticInstrumentOptions& options = {});

/// Ideal instrument: A = 1, β = 0, M = 1, K = 1, D = 0, σ_read = 0, e = 0.
DegradationParams identity_params(const InstrumentProfile& profile);

struct SceneOptions {
  std::size_t regions = 7;
  double shading = 0.05;
};

/// Piecewise-constant reflectance scene (Voronoi regions with smooth spectra),
/// wavelength axis, values in (0, 1].
Cube synthetic_scene(const InstrumentProfile& profile, std::size_t height, std::size_t width,
                     std::uint64_t seed, const SceneOptions& options = {});

}  // namespace ihi
