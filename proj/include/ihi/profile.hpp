#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

namespace ihi {

enum class AxisKind { wavelength, wavenumber, opd };

const char* axis_name(AxisKind axis);
AxisKind parse_axis(const std::string& name);

/// Construction parameters for an instrument sampling profile.
struct ProfileSpec {
  std::string id;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t opd_samples = 0;   // L
  std::size_t center_index = 0;  // c, zero-OPD sample
  std::size_t bands = 0;         // Λ
  double lambda_min_nm = 450.0;
  double lambda_max_nm = 900.0;
  double nu_max_per_nm = 0.0034;
  double opd_step_nm = 146.88;
};

/// Sampling grids of an interferometric imager. The wavenumber grid starts at
/// zero and has L - c samples; the OPD grid is one-sided around index c.
struct InstrumentProfile {
  std::string id;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t center_index = 0;
  double opd_step_nm = 0.0;
  double nu_step_per_nm = 0.0;
  std::vector<double> lambda_nm;
  std::vector<double> nu_per_nm;
  std::vector<double> opd_nm;

  std::size_t bands() const { return lambda_nm.size(); }
  std::size_t wavenumbers() const { return nu_per_nm.size(); }
  std::size_t opd_samples() const { return opd_nm.size(); }
  std::size_t channels(AxisKind axis) const;

  double nu_max() const { return nu_per_nm.empty() ? 0.0 : nu_per_nm.back(); }
  double nyquist_product() const { return 2.0 * opd_step_nm * nu_max(); }

  /// Wavenumber band covered by the wavelength grid, [1/λmax, 1/λmin].
  double band_nu_min() const;
  double band_nu_max() const;
  bool in_band(double nu) const;
  std::vector<bool> band_mask() const;
  std::size_t in_band_count() const;

  /// Throws Errc::invalid_argument naming the violated relation.
  void validate() const;

  bool same_grids(const InstrumentProfile& other) const;
};

InstrumentProfile make_profile(const ProfileSpec& spec);

/// Full-size profile (W=2048, L=256, c=35, N=221, Λ=70). H is caller-supplied.
InstrumentProfile standard_profile(std::size_t height = 120);

/// Scaled-down profile used for tests and quick experiments.
InstrumentProfile desk_profile();

InstrumentProfile profile_by_name(const std::string& name, std::size_t height = 0);

nlohmann::json profile_to_json(const InstrumentProfile& profile);
InstrumentProfile profile_from_json(const nlohmann::json& j);

}  // namespace ihi
