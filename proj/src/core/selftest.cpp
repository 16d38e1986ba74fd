#include "ihi/selftest.hpp"

#include <chrono>
#include <cmath>

#include "ihi/error.hpp"
#include "ihi/instrument.hpp"
#include "ihi/rng.hpp"

namespace ihi {

namespace {

using Clock = std::chrono::steady_clock;

constexpr double kRoundTripTolerance = 1e-5;
constexpr double kCalibrationTolerance = 0.05;

}  // namespace

Cube random_spectra(const InstrumentProfile& profile, std::size_t rows, std::uint64_t seed) {
  Cube out(rows, profile.width, profile.wavenumbers(), AxisKind::wavenumber, profile.id,
           ScalarType::f64);
  for (std::size_t h = 0; h < rows; ++h)
    for (std::size_t w = 0; w < profile.width; ++w) {
      CounterRng g({seed, 0}, h * profile.width + w);
      for (double& v : out.pixel(h, w)) v = g.uniform();
    }
  return out;
}

double round_trip_error(const Cube& x, const DegradationParams& params, const TransformBasis& basis) {
  const auto inverse = build_inverse(params, basis);
  const Cube back = apply_inverse(apply_forward(x, params, basis), inverse.get());
  double num = 0.0, den = 0.0;
  const auto a = back.values();
  const auto b = x.values();
  for (std::size_t k = 0; k < a.size(); ++k) {
    num += (a[k] - b[k]) * (a[k] - b[k]);
    den += b[k] * b[k];
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

ClosedLoopResult closed_loop_calibration(const InstrumentProfile& profile,
                                         const CalibrationCaptureOptions& capture,
                                         std::uint64_t instrument_seed) {
  const auto t0 = Clock::now();
  SyntheticInstrumentOptions io;
  io.seed = instrument_seed;
  const SyntheticInstrument truth = synthetic_instrument(profile, io);
  const TransformBasis basis = build_basis(profile);
  const CalibrationSet set = simulate_calibration(truth, basis, capture);
  CalibrationResult est = calibrate_all(set, profile, truth.params.e);
  ClosedLoopResult out;
  out.errors = compare_params(est.params, truth.params);
  out.report = std::move(est.report);
  out.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return out;
}

bool SelftestResult::ok() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return !checks.empty();
}

nlohmann::json SelftestResult::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& c : checks)
    rows.push_back({{"name", c.name},
                    {"pass", c.pass},
                    {"value", c.value},
                    {"threshold", c.threshold},
                    {"detail", c.detail}});
  return {{"ok", ok()}, {"seconds", seconds}, {"checks", rows}};
}

SelftestResult run_selftest(const SelftestOptions& options) {
  const auto t0 = Clock::now();
  SelftestResult result;
  const InstrumentProfile profile = desk_profile();

  {
    SyntheticInstrumentOptions io;
    io.seed = options.seed;
    const DegradationParams params = synthetic_instrument(profile, io).params;
    const TransformBasis basis = build_basis(profile);
    const std::size_t rows = (100 + profile.width - 1) / profile.width;
    const double err = round_trip_error(random_spectra(profile, rows, options.seed), params, basis);
    result.checks.push_back({"round_trip", err <= kRoundTripTolerance, err, kRoundTripTolerance,
                             "relative L2 of F'F x - x"});
  }

  {
    CalibrationCaptureOptions capture;
    capture.height = options.height;
    capture.seed = options.seed + 1;
    try {
      const ClosedLoopResult loop = closed_loop_calibration(profile, capture, options.seed);
      const auto add = [&](const char* name, double v) {
        result.checks.push_back({std::string("calibration_") + name, v <= kCalibrationTolerance, v,
                                 kCalibrationTolerance, "median relative error"});
      };
      add("dark", loop.errors.dark);
      add("read_noise", loop.errors.read_noise);
      add("gain", loop.errors.gain);
      add("response", loop.errors.response);
      add("absolute", loop.errors.absolute);
      add("background", loop.errors.background);
    } catch (const Error& e) {
      result.checks.push_back({"calibration", false, 0.0, kCalibrationTolerance, e.what()});
    }
  }

  result.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return result;
}

}  // namespace ihi
