#include "ihi/profile.hpp"

#include <algorithm>
#include <cmath>

#include "ihi/error.hpp"

namespace ihi {

namespace {

constexpr double kBandEdgeTolerance = 1e-12;

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  const double step = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) out[i] = lo + step * static_cast<double>(i);
  out[n - 1] = hi;
  return out;
}

}  // namespace

const char* axis_name(AxisKind axis) {
  switch (axis) {
    case AxisKind::wavelength: return "wavelength";
    case AxisKind::wavenumber: return "wavenumber";
    case AxisKind::opd: return "opd";
  }
  return "unknown";
}

AxisKind parse_axis(const std::string& name) {
  if (name == "wavelength") return AxisKind::wavelength;
  if (name == "wavenumber") return AxisKind::wavenumber;
  if (name == "opd") return AxisKind::opd;
  fail(Errc::invalid_argument, "unknown axis kind '" + name + "'", "axis_kind");
}

std::size_t InstrumentProfile::channels(AxisKind axis) const {
  switch (axis) {
    case AxisKind::wavelength: return bands();
    case AxisKind::wavenumber: return wavenumbers();
    case AxisKind::opd: return opd_samples();
  }
  return 0;
}

double InstrumentProfile::band_nu_min() const { return 1.0 / lambda_nm.back(); }
double InstrumentProfile::band_nu_max() const { return 1.0 / lambda_nm.front(); }

bool InstrumentProfile::in_band(double nu) const {
  return nu >= band_nu_min() * (1.0 - kBandEdgeTolerance) &&
         nu <= band_nu_max() * (1.0 + kBandEdgeTolerance);
}

std::vector<bool> InstrumentProfile::band_mask() const {
  std::vector<bool> mask(wavenumbers());
  for (std::size_t j = 0; j < mask.size(); ++j) mask[j] = in_band(nu_per_nm[j]);
  return mask;
}

std::size_t InstrumentProfile::in_band_count() const {
  const auto mask = band_mask();
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
}

void InstrumentProfile::validate() const {
  require(height > 0, Errc::invalid_argument, "must be positive", "H");
  require(width > 0, Errc::invalid_argument, "must be positive", "W");
  require(bands() >= 2, Errc::invalid_argument, "need at least two wavelengths", "lambda_nm");
  require(opd_samples() >= 2, Errc::invalid_argument, "need at least two OPD samples", "opd_nm");
  require(center_index < opd_samples(), Errc::invalid_argument, "outside the OPD grid",
          "center_index");
  require(wavenumbers() == opd_samples() - center_index, Errc::invalid_argument,
          "N must equal L - c", "nu_per_nm");
  const double nyq = nyquist_product();
  require(nyq >= 0.99 && nyq <= 1.0, Errc::invalid_argument,
          "2*dl*nu_max must lie in [0.99, 1.0], got " + std::to_string(nyq), "opd_step_nm");
  for (std::size_t i = 1; i < bands(); ++i)
    require(lambda_nm[i] > lambda_nm[i - 1], Errc::invalid_argument,
            "wavelength grid must be strictly increasing", "lambda_nm");
  for (std::size_t i = 1; i < opd_samples(); ++i)
    require(opd_nm[i] > opd_nm[i - 1], Errc::invalid_argument,
            "OPD grid must be strictly increasing", "opd_nm");
  require(opd_nm[center_index] == 0.0, Errc::invalid_argument, "center sample must have zero OPD",
          "opd_nm");
  require(center_index == 0 || opd_nm[center_index - 1] < 0.0, Errc::invalid_argument,
          "OPD grid must change sign at the center index", "opd_nm");
  require(nu_per_nm.front() == 0.0, Errc::invalid_argument, "wavenumber grid must start at 0",
          "nu_per_nm");
  require(lambda_nm.front() > 0.0, Errc::invalid_argument, "wavelengths must be positive",
          "lambda_nm");
}

bool InstrumentProfile::same_grids(const InstrumentProfile& other) const {
  return width == other.width && center_index == other.center_index &&
         lambda_nm == other.lambda_nm && nu_per_nm == other.nu_per_nm && opd_nm == other.opd_nm;
}

InstrumentProfile make_profile(const ProfileSpec& spec) {
  require(spec.opd_samples > spec.center_index + 1, Errc::invalid_argument,
          "L must exceed c + 1", "opd_samples");
  require(spec.bands >= 2, Errc::invalid_argument, "need at least two bands", "bands");
  require(spec.lambda_max_nm > spec.lambda_min_nm && spec.lambda_min_nm > 0,
          Errc::invalid_argument, "invalid wavelength range", "lambda_nm");

  InstrumentProfile p;
  p.id = spec.id;
  p.height = spec.height;
  p.width = spec.width;
  p.center_index = spec.center_index;
  p.opd_step_nm = spec.opd_step_nm;

  const std::size_t n = spec.opd_samples - spec.center_index;
  p.nu_step_per_nm = spec.nu_max_per_nm / static_cast<double>(n - 1);
  p.nu_per_nm.resize(n);
  for (std::size_t j = 0; j < n; ++j) p.nu_per_nm[j] = static_cast<double>(j) * p.nu_step_per_nm;

  p.opd_nm.resize(spec.opd_samples);
  for (std::size_t i = 0; i < spec.opd_samples; ++i)
    p.opd_nm[i] = (static_cast<double>(i) - static_cast<double>(spec.center_index)) * spec.opd_step_nm;

  p.lambda_nm = linspace(spec.lambda_min_nm, spec.lambda_max_nm, spec.bands);
  p.validate();
  return p;
}

InstrumentProfile standard_profile(std::size_t height) {
  ProfileSpec spec;
  spec.id = "standard";
  spec.height = height;
  spec.width = 2048;
  spec.opd_samples = 256;
  spec.center_index = 35;
  spec.bands = 70;
  return make_profile(spec);
}

InstrumentProfile desk_profile() {
  ProfileSpec spec;
  spec.id = "desk";
  spec.height = 32;
  spec.width = 64;
  spec.opd_samples = 64;
  spec.center_index = 9;
  spec.bands = 16;
  // 1 / (2 * nu_max) = 147.0588..., truncated to keep 2*dl*nu_max below 1.
  spec.opd_step_nm = std::floor(100.0 / (2.0 * spec.nu_max_per_nm)) / 100.0;
  return make_profile(spec);
}

InstrumentProfile profile_by_name(const std::string& name, std::size_t height) {
  if (name == "standard") return standard_profile(height == 0 ? 120 : height);
  if (name == "desk") {
    auto p = desk_profile();
    if (height != 0) p.height = height;
    return p;
  }
  fail(Errc::invalid_argument, "unknown profile '" + name + "' (expected standard or desk)",
       "profile");
}

nlohmann::json profile_to_json(const InstrumentProfile& p) {
  return {{"id", p.id},
          {"H", p.height},
          {"W", p.width},
          {"center_index", p.center_index},
          {"opd_step_nm", p.opd_step_nm},
          {"nu_step_per_nm", p.nu_step_per_nm},
          {"lambda_nm", p.lambda_nm},
          {"nu_per_nm", p.nu_per_nm},
          {"opd_nm", p.opd_nm}};
}

InstrumentProfile profile_from_json(const nlohmann::json& j) {
  try {
    InstrumentProfile p;
    p.id = j.value("id", j.value("profile", std::string("custom")));
    p.height = j.at("H").get<std::size_t>();
    p.width = j.at("W").get<std::size_t>();
    p.center_index = j.at("center_index").get<std::size_t>();
    p.lambda_nm = j.at("lambda_nm").get<std::vector<double>>();
    p.nu_per_nm = j.at("nu_per_nm").get<std::vector<double>>();
    p.opd_nm = j.at("opd_nm").get<std::vector<double>>();
    require(p.nu_per_nm.size() >= 2 && p.opd_nm.size() >= 2, Errc::invalid_argument,
            "grids too short", "nu_per_nm");
    p.nu_step_per_nm = j.contains("nu_step_per_nm") ? j["nu_step_per_nm"].get<double>()
                                                     : p.nu_per_nm[1] - p.nu_per_nm[0];
    p.opd_step_nm = j.contains("opd_step_nm") ? j["opd_step_nm"].get<double>()
                                              : p.opd_nm[1] - p.opd_nm[0];
    p.validate();
    return p;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::invalid_argument, std::string("malformed profile JSON: ") + e.what(), "profile");
  }
}

}  // namespace ihi
