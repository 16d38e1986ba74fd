#include "ihi/instrument.hpp"

#include <cmath>
#include <algorithm>
#include <numbers>

#include "ihi/rng.hpp"

namespace ihi {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// One independent generator per labelled quantity.
CounterRng stream_for(std::uint64_t seed, std::string_view label, std::uint64_t element = 0) {
  return CounterRng({derive_seed(seed, label, 0), 0}, element);
}

}  // namespace

SyntheticInstrument synthetic_instrument(const InstrumentProfile& profile,
                                         const SyntheticInstrumentOptions& o) {
  profile.validate();
  const auto W = static_cast<Eigen::Index>(profile.width);
  const auto L = static_cast<Eigen::Index>(profile.opd_samples());
  const auto N = static_cast<Eigen::Index>(profile.wavenumbers());
  const double nu_c = 0.5 * (profile.band_nu_min() + profile.band_nu_max());
  const double half_band = 0.5 * (profile.band_nu_max() - profile.band_nu_min());

  SyntheticInstrument out;
  DegradationParams& p = out.params;
  p.profile = profile;
  p.e = o.e;
  p.A.resize(W, N);
  p.beta.resize(W, L);
  p.K.resize(W, L);
  p.D.resize(W, L);
  p.sigma_read.resize(W, L);
  out.relative_response.resize(W, L);
  out.scan_response.resize(W, L);

  for (Eigen::Index w = 0; w < W; ++w) {
    auto col = stream_for(o.seed, "column", static_cast<std::uint64_t>(w));
    const double t = static_cast<double>(w) / static_cast<double>(W);
    const double stripe = std::sin(kTwoPi * (2.3 * t + 0.1)) + 0.5 * (col.uniform() - 0.5);
    const double stripe2 = std::cos(kTwoPi * (1.7 * t + 0.3)) + 0.5 * (col.uniform() - 0.5);

    const double amp = 1.0 + 0.05 * stripe;
    const double phase0 = o.phase_rad * (1.0 + 0.3 * (col.uniform() - 0.5));
    double max_abs = 0.0;
    for (Eigen::Index j = 0; j < N; ++j) {
      const double x = (profile.nu_per_nm[static_cast<std::size_t>(j)] - nu_c) / half_band;
      const double mag = amp * (0.55 + 0.45 * std::exp(-0.5 * (x / 0.8) * (x / 0.8)));
      const double phase = phase0 + o.phase_slope_rad * x;
      p.A(w, j) = std::polar(mag, phase);
      max_abs = std::max(max_abs, mag);
    }

    const double beta = o.background_margin * static_cast<double>(N) * max_abs;
    const double tilt = o.scan_distortion * (col.uniform() * 2.0 - 1.0);
    const double bow = o.scan_distortion * (col.uniform() * 2.0 - 1.0);
    for (Eigen::Index i = 0; i < L; ++i) {
      auto el = stream_for(o.seed, "element", static_cast<std::uint64_t>(w * L + i));
      const double s = static_cast<double>(i) / static_cast<double>(L - 1) - 0.5;
      p.beta(w, i) = beta;
      out.scan_response(w, i) = 1.0 + tilt * s + bow * (s * s - 1.0 / 12.0);
      out.relative_response(w, i) =
          1.0 + o.response_stripe * stripe2 + o.response_jitter * el.normal();
      p.K(w, i) = o.gain * (1.0 + o.gain_stripe * stripe + o.gain_jitter * el.normal());
      p.D(w, i) = o.dark * (1.0 + o.dark_stripe * stripe2 + 0.01 * el.normal());
      p.sigma_read(w, i) = o.read_noise * (1.0 + o.read_noise_stripe * std::abs(stripe));
    }
    out.scan_response.row(w) /= out.scan_response.row(w).mean();
  }

  const double scale = (out.relative_response.array() * out.scan_response.array()).mean();
  out.relative_response /= scale;
  p.M = (out.relative_response.array() * out.scan_response.array()).matrix();
  return out;
}

DegradationParams identity_params(const InstrumentProfile& profile) {
  const auto W = static_cast<Eigen::Index>(profile.width);
  const auto L = static_cast<Eigen::Index>(profile.opd_samples());
  const auto N = static_cast<Eigen::Index>(profile.wavenumbers());
  DegradationParams p;
  p.profile = profile;
  p.A = ComplexMap2::Constant(W, N, {1.0, 0.0});
  p.beta = Map2::Zero(W, L);
  p.M = Map2::Ones(W, L);
  p.K = Map2::Ones(W, L);
  p.D = Map2::Zero(W, L);
  p.sigma_read = Map2::Zero(W, L);
  p.e = 0.0;
  return p;
}

Cube synthetic_scene(const InstrumentProfile& profile, std::size_t height, std::size_t width,
                     std::uint64_t seed, const SceneOptions& options) {
  struct Region {
    double row, col;
    std::vector<double> spectrum;
  };
  const std::size_t bands = profile.bands();
  const double lam0 = profile.lambda_nm.front();
  const double span = profile.lambda_nm.back() - lam0;

  std::vector<Region> regions(std::max<std::size_t>(1, options.regions));
  for (std::size_t r = 0; r < regions.size(); ++r) {
    auto g = stream_for(seed, "region", r);
    Region& reg = regions[r];
    reg.row = g.uniform() * static_cast<double>(height);
    reg.col = g.uniform() * static_cast<double>(width);
    const double base = 0.15 + 0.35 * g.uniform();
    const double slope = 0.3 * (g.uniform() - 0.5);
    const int bumps = 1 + static_cast<int>(g.uniform() * 2.0);
    std::vector<double> centers, widths, heights;
    for (int b = 0; b < bumps; ++b) {
      centers.push_back(lam0 + span * g.uniform());
      widths.push_back(span * (0.12 + 0.15 * g.uniform()));
      heights.push_back(0.4 * g.uniform());
    }
    reg.spectrum.resize(bands);
    for (std::size_t k = 0; k < bands; ++k) {
      const double lam = profile.lambda_nm[k];
      double v = base + slope * (lam - lam0) / span;
      for (int b = 0; b < bumps; ++b) {
        const double z = (lam - centers[static_cast<std::size_t>(b)]) / widths[static_cast<std::size_t>(b)];
        v += heights[static_cast<std::size_t>(b)] * std::exp(-0.5 * z * z);
      }
      reg.spectrum[k] = std::clamp(v, 0.02, 1.0);
    }
  }

  Cube out(height, width, bands, AxisKind::wavelength, profile.id);
  for (std::size_t h = 0; h < height; ++h)
    for (std::size_t w = 0; w < width; ++w) {
      std::size_t best = 0;
      double best_d = INFINITY;
      for (std::size_t r = 0; r < regions.size(); ++r) {
        const double dr = static_cast<double>(h) - regions[r].row;
        const double dc = static_cast<double>(w) - regions[r].col;
        const double d = dr * dr + dc * dc;
        if (d < best_d) {
          best_d = d;
          best = r;
        }
      }
      const double shade =
          1.0 - options.shading * static_cast<double>(h + w) / static_cast<double>(height + width);
      auto px = out.pixel(h, w);
      for (std::size_t k = 0; k < bands; ++k) px[k] = regions[best].spectrum[k] * shade;
    }
  return out;
}

}  // namespace ihi
