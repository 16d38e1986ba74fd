#pragma once

#include <span>

#include "ihi/cube.hpp"
#include "ihi/profile.hpp"

namespace ihi {

/// Per-pixel linear interpolation of a wavelength spectrum at λ = 1/ν for every
/// in-band wavenumber bin. Out-of-band bins are exactly zero. Values are moved
/// without a dλ/dν Jacobian.
void wavelength_to_wavenumber_pixel(std::span<const double> spectrum_lambda,
                                    const InstrumentProfile& profile, std::span<double> out_nu);

Cube resample_hsi_to_wavenumber(const Cube& hsi, const InstrumentProfile& profile);

/// Per-pixel linear interpolation of the wavenumber spectrum at ν = 1/λ.
Cube resample_wavenumber_to_hsi(const Cube& spectrum, const InstrumentProfile& profile);

}  // namespace ihi
