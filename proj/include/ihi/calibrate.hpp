#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ihi/cube.hpp"
#include "ihi/instrument.hpp"
#include "ihi/params.hpp"
#include "ihi/transform.hpp"

namespace ihi {

inline constexpr std::size_t kMinCalibrationRows = 16;
inline constexpr double kInvalidBudget = 0.10;

/// Radiometric calibration captures, all OPD cubes on one profile.
struct CalibrationSet {
  Cube dark;                                    // I_R0
  std::vector<Cube> relative;                   // I_Ri, interferometer removed
  std::vector<Cube> absolute;                   // I_Ai, uniform-light interferograms
  std::vector<std::vector<double>> reference;   // B_Ai, N-vectors

  void validate(const InstrumentProfile& profile) const;
};

struct CalibrationCaptureOptions {
  std::size_t height = 1024;
  std::vector<double> relative_rates{1e3, 3e3, 1e4};
  std::vector<double> absolute_levels{2e3, 5e3, 1e4};
  std::uint64_t seed = 7;
};

/// Smooth in-band reference spectrum with in-band mean `level`; zero out of
/// band. `variant` changes its shape.
std::vector<double> reference_spectrum(const InstrumentProfile& profile, double level,
                                       std::size_t variant);

/// Synthesizes dark, relative and absolute captures from a known instrument.
/// Relative captures see only the sensor non-uniformity M_R; the electronic
/// gain is not randomized (e' = 1).
CalibrationSet simulate_calibration(const SyntheticInstrument& truth, const TransformBasis& basis,
                                    const CalibrationCaptureOptions& options = {});

/// dark.ihic, relative_<i>.ihic, absolute_<i>.ihic, reference_<i>.ihic
void write_calibration_set(const CalibrationSet& set, const InstrumentProfile& profile,
                           const std::filesystem::path& dir);
CalibrationSet read_calibration_set(const std::filesystem::path& dir, InstrumentProfile& profile);

struct DarkEstimate {
  Map2 dark;        // D = μ_H(I_R0)
  Map2 read_noise;  // σ_read = σ_H(I_R0)
};

DarkEstimate estimate_dark(const Cube& dark_capture);

struct GainEstimate {
  Map2 gain;                  // imputed estimate
  Map2 raw;                   // mean of valid K_i, 0 where none is valid
  std::vector<std::uint8_t> valid;  // W*L, row-major
  std::size_t invalid_count = 0;
  std::size_t imputed_count = 0;
  double invalid_fraction() const;
};

/// K_i = (σ²_H(I_Ri) - σ²_read) / (μ_H(I_Ri) - D), averaged over valid i.
/// Elements without a valid level take their detector column's median.
GainEstimate estimate_gain(std::span<const Cube> relative, const Map2& dark,
                           const Map2& read_noise);

/// Throws Errc::budget_exceeded when more than 10% of elements are invalid.
void check_invalid_budget(double invalid_fraction, const std::string& stage);

struct ResponseEstimate {
  Map2 relative;  // M_R, mean 1 over (W, L)
  Map2 scan;      // M_A, mean 1 per column
  Map2 combined;  // M = M_R ⊙ M_A, mean 1 over (W, L)
  std::size_t guarded = 0;
};

/// M_R from the dark- and gain-corrected relative captures; M_A from the
/// low-pass envelope of the absolute captures once the in-band fringe
/// component is fitted out.
ResponseEstimate estimate_response(std::span<const Cube> relative, std::span<const Cube> absolute,
                                   const Map2& dark, const Map2& gain,
                                   const std::vector<bool>& fringe_bins,
                                   const TransformBasis& basis);

struct SpectralEstimate {
  ComplexMap2 A;
  Map2 beta;
  std::size_t guarded = 0;
  double fit_rms = 0.0;
};

/// Fits the in-band complex spectrum of I'_Ai = (μ_H(I_Ai) - D) / (K ⊙ M)
/// (plus a low-order background), A_i = spectrum / B_Ai, and
/// β_i = (I'_Ai - ℱ{A_i ⊙ B_Ai}) / μ_N(B_Ai). Out-of-band A is zero.
SpectralEstimate estimate_absolute_response(std::span<const Cube> absolute,
                                            std::span<const std::vector<double>> reference,
                                            const Map2& gain, const Map2& response,
                                            const Map2& dark, const TransformBasis& basis);

/// Bins where any reference spectrum exceeds 1e-6 of its maximum.
std::vector<bool> reference_support(std::span<const std::vector<double>> reference);

struct CalibrationResult {
  DegradationParams params;
  nlohmann::json report;
};

/// dark -> gain -> response -> absolute response. `e` is passed through.
CalibrationResult calibrate_all(const CalibrationSet& set, const InstrumentProfile& profile,
                                double e);

struct ParamErrors {
  double dark = 0, read_noise = 0, gain = 0, response = 0, absolute = 0, background = 0;
  double max() const;
  nlohmann::json to_json() const;
};

/// Median relative error of each estimated map; A over in-band bins only.
ParamErrors compare_params(const DegradationParams& estimate, const DegradationParams& truth);

double median(std::vector<double> values);

}  // namespace ihi
