#include <doctest.h>

#include "ihi/resample.hpp"
#include "support.hpp"

using namespace ihi;

namespace {

Cube smooth_hsi(const InstrumentProfile& p, std::size_t h, std::size_t w) {
  Cube out(h, w, p.bands(), AxisKind::wavelength, p.id, ScalarType::f64);
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c)
      for (std::size_t k = 0; k < p.bands(); ++k) {
        const double t = (p.lambda_nm[k] - 450.0) / 450.0;
        const double a = 1.0 + 0.1 * static_cast<double>(r + c);
        out(r, c, k) = a * (2.0 + 0.8 * t - 0.6 * t * t);
      }
  return out;
}

}  // namespace

TEST_CASE("constant spectrum resamples to in-band constant") {
  for (const auto& p : {desk_profile(), standard_profile(2)}) {
    const Cube hsi = test::constant_cube(2, 3, p.bands(), AxisKind::wavelength, p.id, 4.5);
    const Cube nu = resample_hsi_to_wavenumber(hsi, p);
    CHECK(nu.axis() == AxisKind::wavenumber);
    for (std::size_t j = 0; j < p.wavenumbers(); ++j) {
      const double expect = p.in_band(p.nu_per_nm[j]) ? 4.5 : 0.0;
      CHECK(nu(1, 2, j) == doctest::Approx(expect).epsilon(1e-12));
    }
    const Cube back = resample_wavenumber_to_hsi(nu, p);
    for (double v : back.values()) CHECK(v == doctest::Approx(4.5).epsilon(1e-12));
  }
}

TEST_CASE("zero spectrum maps to zero") {
  const InstrumentProfile p = desk_profile();
  const Cube nu(2, 2, p.wavenumbers(), AxisKind::wavenumber, p.id, ScalarType::f64);
  CHECK(test::all_equal(resample_wavenumber_to_hsi(nu, p), 0.0));
}

TEST_CASE("single channel stays local") {
  for (const auto& p : {desk_profile(), standard_profile(1)}) {
    for (std::size_t k = 1; k + 1 < p.bands(); ++k) {
      Cube hsi(1, 1, p.bands(), AxisKind::wavelength, p.id, ScalarType::f64);
      hsi(0, 0, k) = 1.0;
      const Cube nu = resample_hsi_to_wavenumber(hsi, p);
      for (std::size_t j = 0; j < p.wavenumbers(); ++j) {
        if (nu(0, 0, j) == 0.0) continue;
        const double lambda = 1.0 / p.nu_per_nm[j];
        CHECK(lambda > p.lambda_nm[k - 1]);
        CHECK(lambda < p.lambda_nm[k + 1]);
      }
    }
  }
}

TEST_CASE("smooth spectra round trip within 2 percent") {
  for (const auto& p : {desk_profile(), standard_profile(1)}) {
    const Cube hsi = smooth_hsi(p, 2, 3);
    const Cube back = resample_wavenumber_to_hsi(resample_hsi_to_wavenumber(hsi, p), p);
    CHECK(test::relative_l2(back, hsi) <= 0.02);
  }
}

TEST_CASE("axis checks") {
  const InstrumentProfile p = desk_profile();
  const Cube wrong(1, 1, p.wavenumbers(), AxisKind::wavenumber, p.id);
  CHECK_THROWS(resample_hsi_to_wavenumber(wrong, p));
}
