#include "ihi/degrade.hpp"

#include <cmath>

#include "ihi/error.hpp"
#include "ihi/parallel.hpp"
#include "ihi/stats.hpp"

namespace ihi {

namespace {

// Stream offset separating the gain draw from element noise.
constexpr std::uint64_t kGainStreamSalt = 0x6761696eull;

void check_opd_cube(const Cube& cube, const Map2& map, const char* what) {
  expect_axis(cube, AxisKind::opd, static_cast<std::size_t>(map.cols()), what);
  require(cube.width() == static_cast<std::size_t>(map.rows()), Errc::shape_mismatch,
          "width does not match the parameter maps", what);
}

}  // namespace

Cube optical_degrade(const Cube& b0, const DegradationParams& params, const TransformBasis& basis) {
  params.validate_shapes();
  Cube out = apply_interferogram_transform(b0, params.A, basis);
  const Map2 mu = spectral_mean(b0);
  const std::size_t L = out.channels();
  parallel_for(0, out.height(), [&](std::size_t h) {
    for (std::size_t w = 0; w < out.width(); ++w) {
      const auto wi = static_cast<Eigen::Index>(w);
      const double background = mu(static_cast<Eigen::Index>(h), wi);
      auto px = out.pixel(h, w);
      for (std::size_t i = 0; i < L; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        px[i] = params.M(wi, ii) * (px[i] + params.beta(wi, ii) * background);
      }
    }
  });
  return out;
}

ElectronicState unit_electronic_state(const DegradationParams& params) {
  return {1.0, params.K, params.D, params.sigma_read};
}

ElectronicState sample_electronic_gain(const DegradationParams& params, RngHandle rng) {
  require(params.e >= 0.0, Errc::invalid_argument, "must be non-negative", "e");
  ElectronicState state = unit_electronic_state(params);
  if (params.e == 0.0) return state;
  CounterRng draw({rng.seed, rng.stream ^ kGainStreamSalt}, kSceneElement);
  state.gain = std::exp(params.e * draw.normal());
  state.K *= state.gain;
  state.D *= state.gain;
  state.sigma_read *= state.gain;
  return state;
}

Cube electronic_degrade(const Cube& optical, const ElectronicState& state, RngHandle rng,
                        NoiseMode mode) {
  check_opd_cube(optical, state.K, "optical");
  require(state.D.rows() == state.K.rows() && state.D.cols() == state.K.cols() &&
              state.sigma_read.rows() == state.K.rows() &&
              state.sigma_read.cols() == state.K.cols(),
          Errc::shape_mismatch, "K, D and sigma_read must share one shape", "state");

  Cube out = optical.like(AxisKind::opd, optical.channels());
  const std::size_t W = optical.width();
  const std::size_t L = optical.channels();
  parallel_for(0, optical.height(), [&](std::size_t h) {
    for (std::size_t w = 0; w < W; ++w) {
      const auto wi = static_cast<Eigen::Index>(w);
      const auto in = optical.pixel(h, w);
      auto dst = out.pixel(h, w);
      for (std::size_t i = 0; i < L; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        if (mode == NoiseMode::deterministic) {
          dst[i] = state.K(wi, ii) * in[i] + state.D(wi, ii);
          continue;
        }
        CounterRng gen(rng, optical.index(h, w, i));
        const double electrons = gen.poisson(std::max(in[i], 0.0));
        const double sigma = state.sigma_read(wi, ii);
        const double read = sigma > 0.0 ? sigma * gen.normal() : 0.0;
        dst[i] = state.K(wi, ii) * electrons + state.D(wi, ii) + read;
      }
    }
  });
  return out;
}

Cube degrade(const Cube& b0, const DegradationParams& params, const TransformBasis& basis,
             RngHandle rng, NoiseMode mode) {
  for (double v : b0.values())
    require(v >= 0.0, Errc::invalid_argument, "source spectrum must be non-negative", "B0");
  const Cube optical = optical_degrade(b0, params, basis);
  const ElectronicState state = mode == NoiseMode::deterministic
                                    ? unit_electronic_state(params)
                                    : sample_electronic_gain(params, rng);
  return electronic_degrade(optical, state, rng, mode);
}

}  // namespace ihi
