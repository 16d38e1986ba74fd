#pragma once

#include <filesystem>

#include "ihi/cube.hpp"
#include "ihi/profile.hpp"

namespace ihi {

/// Degradation parameter set. A is W x N; every other map is W x L.
struct DegradationParams {
  ComplexMap2 A;       // absolute response, with phase error
  Map2 beta;           // background coefficient
  Map2 M;              // relative response
  Map2 K;              // system gain, counts per photoelectron
  Map2 D;              // dark current, counts
  Map2 sigma_read;     // readout noise std, counts
  double e = 0.0;      // electronic gain log-std
  InstrumentProfile profile;

  std::size_t width() const { return static_cast<std::size_t>(K.rows()); }
  std::size_t opd_samples() const { return static_cast<std::size_t>(K.cols()); }
  std::size_t wavenumbers() const { return static_cast<std::size_t>(A.cols()); }

  /// Shapes, finiteness, K > 0, sigma_read >= 0, e >= 0 and |A| > 0 in band.
  void validate() const;
  /// Shapes and finiteness only.
  void validate_shapes() const;
};

inline constexpr int kParamsVersion = 1;

/// Directory with A_real, A_imag, beta, M, K, D, sigma_read (.ihic, 2-D) and
/// params.json {e, profile, version}.
void write_params(const DegradationParams& params, const std::filesystem::path& dir);
DegradationParams read_params(const std::filesystem::path& dir);

}  // namespace ihi
