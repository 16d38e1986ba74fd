#include "ihi/resample.hpp"

#include <algorithm>
#include <cmath>

#include "ihi/error.hpp"
#include "ihi/parallel.hpp"

namespace ihi {

namespace {

struct Tap {
  std::size_t lo = 0;
  double frac = 0.0;  // weight of lo + 1
  bool active = false;
};

// Interpolation taps for the wavelength grid evaluated at 1/nu_j.
std::vector<Tap> lambda_taps(const InstrumentProfile& profile) {
  const auto& lam = profile.lambda_nm;
  std::vector<Tap> taps(profile.wavenumbers());
  for (std::size_t j = 0; j < taps.size(); ++j) {
    const double nu = profile.nu_per_nm[j];
    if (nu <= 0.0 || !profile.in_band(nu)) continue;
    const double target = std::clamp(1.0 / nu, lam.front(), lam.back());
    auto it = std::upper_bound(lam.begin(), lam.end(), target);
    std::size_t hi = static_cast<std::size_t>(it - lam.begin());
    hi = std::clamp<std::size_t>(hi, 1, lam.size() - 1);
    const std::size_t lo = hi - 1;
    taps[j] = {lo, (target - lam[lo]) / (lam[hi] - lam[lo]), true};
  }
  return taps;
}

// Interpolation taps for the uniform wavenumber grid evaluated at 1/lambda_k.
std::vector<Tap> nu_taps(const InstrumentProfile& profile) {
  const auto& nu = profile.nu_per_nm;
  const double step = profile.nu_step_per_nm;
  // Band-edge channels fall between an in-band and an out-of-band bin; clamp
  // to the in-band range so they never blend with the zero fill.
  std::size_t first = nu.size(), last = 0;
  for (std::size_t j = 0; j < nu.size(); ++j)
    if (profile.in_band(nu[j])) {
      first = std::min(first, j);
      last = std::max(last, j);
    }
  if (first > last) {
    first = 0;
    last = nu.size() - 1;
  }
  std::vector<Tap> taps(profile.bands());
  for (std::size_t k = 0; k < taps.size(); ++k) {
    const double target = 1.0 / profile.lambda_nm[k];
    double pos = target / step;
    pos = std::clamp(pos, static_cast<double>(first), static_cast<double>(last));
    std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    if (lo >= nu.size() - 1) lo = nu.size() - 2;
    taps[k] = {lo, pos - static_cast<double>(lo), true};
  }
  return taps;
}

void apply_taps(std::span<const double> in, const std::vector<Tap>& taps, std::span<double> out) {
  for (std::size_t j = 0; j < taps.size(); ++j) {
    const Tap& t = taps[j];
    out[j] = t.active ? (1.0 - t.frac) * in[t.lo] + t.frac * in[t.lo + 1] : 0.0;
  }
}

}  // namespace

void wavelength_to_wavenumber_pixel(std::span<const double> spectrum_lambda,
                                    const InstrumentProfile& profile, std::span<double> out_nu) {
  require(spectrum_lambda.size() == profile.bands() && out_nu.size() == profile.wavenumbers(),
          Errc::shape_mismatch, "spectrum length does not match the profile", "spectrum");
  apply_taps(spectrum_lambda, lambda_taps(profile), out_nu);
}

Cube resample_hsi_to_wavenumber(const Cube& hsi, const InstrumentProfile& profile) {
  expect_axis(hsi, AxisKind::wavelength, profile.bands(), "hsi");
  const auto taps = lambda_taps(profile);
  Cube out = hsi.like(AxisKind::wavenumber, profile.wavenumbers());
  parallel_for(0, hsi.height(), [&](std::size_t h) {
    for (std::size_t w = 0; w < hsi.width(); ++w) apply_taps(hsi.pixel(h, w), taps, out.pixel(h, w));
  });
  return out;
}

Cube resample_wavenumber_to_hsi(const Cube& spectrum, const InstrumentProfile& profile) {
  expect_axis(spectrum, AxisKind::wavenumber, profile.wavenumbers(), "spectrum");
  const auto taps = nu_taps(profile);
  Cube out = spectrum.like(AxisKind::wavelength, profile.bands());
  parallel_for(0, spectrum.height(), [&](std::size_t h) {
    for (std::size_t w = 0; w < spectrum.width(); ++w)
      apply_taps(spectrum.pixel(h, w), taps, out.pixel(h, w));
  });
  return out;
}

}  // namespace ihi
