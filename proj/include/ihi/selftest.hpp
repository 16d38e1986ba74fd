#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "ihi/calibrate.hpp"
#include "ihi/cube.hpp"
#include "ihi/params.hpp"
#include "ihi/transform.hpp"

namespace ihi {

/// Uniform (0, 1) wavenumber spectra, rows x W pixels.
Cube random_spectra(const InstrumentProfile& profile, std::size_t rows, std::uint64_t seed);

/// Relative L2 error of apply_inverse(apply_forward(x)) against x.
double round_trip_error(const Cube& x, const DegradationParams& params, const TransformBasis& basis);

struct ClosedLoopResult {
  ParamErrors errors;
  nlohmann::json report;
  double seconds = 0.0;
};

/// Synthetic instrument → captures → calibrate_all → per-parameter errors.
ClosedLoopResult closed_loop_calibration(const InstrumentProfile& profile,
                                         const CalibrationCaptureOptions& capture,
                                         std::uint64_t instrument_seed);

struct SelftestCheck {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct SelftestResult {
  std::vector<SelftestCheck> checks;
  double seconds = 0.0;

  bool ok() const;
  nlohmann::json to_json() const;
};

struct SelftestOptions {
  std::size_t height = 1024;
  std::uint64_t seed = 1;
};

/// Round trip on 100 desk spectra and the closed-loop calibration suite.
SelftestResult run_selftest(const SelftestOptions& options = {});

}  // namespace ihi
