#include <doctest.h>

#include <complex>

#include "ihi/degrade.hpp"
#include "ihi/error.hpp"
#include "ihi/instrument.hpp"
#include "ihi/metrics.hpp"
#include "ihi/reconstruct.hpp"
#include "ihi/resample.hpp"
#include "ihi/synthesize.hpp"
#include "support.hpp"

using namespace ihi;

namespace {

double energy(const Cube& a, const Cube& b) {
  double e = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a.values()[k] - b.values()[k];
    e += d * d;
  }
  return e;
}

DegradationParams real_positive(const InstrumentProfile& p) {
  SyntheticInstrumentOptions o;
  o.phase_rad = 0.0;
  o.phase_slope_rad = 0.0;
  return synthetic_instrument(p, o).params;
}

SamplePair noiseless(const DegradationParams& params, const TransformBasis& basis,
                     std::uint64_t seed, std::size_t height = 32) {
  const Cube scene = synthetic_scene(params.profile, height, params.width(), seed);
  return synthesize_pair(scene, params, basis, {seed, 0}, kDefaultTargetRate,
                         NoiseMode::deterministic);
}

// Wavelength reference reachable through the wavenumber grid.
Cube reachable(const SamplePair& pair, const InstrumentProfile& p) {
  return resample_wavenumber_to_hsi(pair.gt_nu, p);
}

class FailingPrior final : public Prior {
 public:
  Cube denoise(const Cube& x, std::size_t stage) override {
    if (stage == 2) throw std::runtime_error("denoiser crashed");
    return x;
  }
  std::string id() const override { return "failing"; }
};

class ShrinkingPrior final : public Prior {
 public:
  Cube denoise(const Cube& x, std::size_t) override {
    return Cube(x.height(), x.width(), x.channels() - 1, x.axis(), x.profile_id());
  }
  std::string id() const override { return "shrinking"; }
};

}  // namespace

TEST_CASE("precorrect modes") {
  const InstrumentProfile p = desk_profile();
  const ReconstructContext ctx = make_context(synthetic_instrument(p).params);
  Cube dark(3, p.width, p.opd_samples(), AxisKind::opd, p.id);
  for (std::size_t h = 0; h < dark.height(); ++h)
    for (std::size_t w = 0; w < dark.width(); ++w)
      for (std::size_t i = 0; i < dark.channels(); ++i)
        dark(h, w, i) = ctx.params.D(static_cast<Eigen::Index>(w), static_cast<Eigen::Index>(i));
  CHECK(test::all_equal(precorrect(dark, ctx, BackgroundMode::dark_only), 0.0));
  CHECK(test::max_abs_diff(precorrect(dark, ctx, BackgroundMode::none), dark) == 0.0);
  CHECK(parse_background("dark+background") == BackgroundMode::dark_background);
  CHECK_THROWS_AS(parse_background("sky"), Error);

  const Cube wrong(3, p.width, p.opd_samples() + 1, AxisKind::opd, p.id);
  CHECK_THROWS_AS(precorrect(wrong, ctx, BackgroundMode::dark_only), Error);
}

TEST_CASE("background removal") {
  const InstrumentProfile p = desk_profile();
  const DegradationParams params = synthetic_instrument(p).params;
  const ReconstructContext ctx = make_context(params);
  const SamplePair pair = noiseless(params, ctx.basis, 11);

  DegradationParams no_background = params;
  no_background.beta.setZero();
  const ElectronicState unit = unit_electronic_state(params);
  Cube signal = electronic_degrade(optical_degrade(pair.gt_nu, no_background, ctx.basis), unit,
                                   {0, 0}, NoiseMode::deterministic);
  signal = precorrect(signal, ctx, BackgroundMode::dark_only);

  const double dark_only = energy(precorrect(pair.interferogram, ctx, BackgroundMode::dark_only), signal);
  const double full =
      energy(precorrect(pair.interferogram, ctx, BackgroundMode::dark_background), signal);
  MESSAGE("background energy ratio " << full / dark_only);
  CHECK(full <= 0.1 * dark_only);
}

TEST_CASE("direct inverse") {
  const InstrumentProfile p = desk_profile();
  const DegradationParams params = synthetic_instrument(p).params;
  const ReconstructContext ctx = make_context(params);
  const SamplePair clean = noiseless(params, ctx.basis, 12);
  const PsnrValue exact = psnr(reconstruct_direct(clean.interferogram, ctx), reachable(clean, p));
  MESSAGE("noiseless direct PSNR " << exact.db);
  CHECK((exact.infinite || exact.db >= 60.0));

  const Cube scene = synthetic_scene(p, 32, p.width, 12);
  const SamplePair noisy = synthesize_pair(scene, params, ctx.basis, {12, 0});
  const PsnrValue degraded = psnr(reconstruct_direct(noisy.interferogram, ctx), reachable(noisy, p));
  CHECK(!degraded.infinite);
  CHECK(std::isfinite(degraded.db));
  CHECK(degraded.db < (exact.infinite ? 1e300 : exact.db));
}

TEST_CASE("apodization window") {
  const auto w = apodization_window(8, 2);
  CHECK(w[2] == 1.0);
  CHECK(w[0] < w[1]);
  CHECK(w[7] > 0.0);
  for (std::size_t i = 3; i < 8; ++i) CHECK(w[i] < w[i - 1]);
  CHECK_THROWS_AS(apodization_window(4, 4), Error);
}

TEST_CASE("traditional matches direct for real positive response" * doctest::should_fail()) {
  // The triangular window costs about 21 dB on the 18-bin desk band.
  const InstrumentProfile p = desk_profile();
  const ReconstructContext ctx = make_context(real_positive(p));
  const SamplePair pair = noiseless(ctx.params, ctx.basis, 13);
  const Cube ref = pair.gt_hsi;
  const double direct = psnr(reconstruct_direct(pair.interferogram, ctx), ref).db;
  const double traditional = psnr(reconstruct_traditional(pair.interferogram, ctx), ref).db;
  MESSAGE("direct " << direct << " dB, traditional " << traditional << " dB");
  CHECK(std::abs(direct - traditional) <= 1.0);
}

TEST_CASE("traditional loses to direct under phase error") {
  const InstrumentProfile p = desk_profile();
  const ReconstructContext ctx = make_context(synthetic_instrument(p).params);
  bool has_phase = false;
  for (Eigen::Index k = 0; k < ctx.params.A.size(); ++k)
    has_phase = has_phase || std::imag(ctx.params.A.data()[k]) != 0.0;
  REQUIRE(has_phase);
  const SamplePair pair = noiseless(ctx.params, ctx.basis, 14);
  const double direct = psnr(reconstruct_direct(pair.interferogram, ctx), pair.gt_hsi).db;
  const double traditional = psnr(reconstruct_traditional(pair.interferogram, ctx), pair.gt_hsi).db;
  MESSAGE("direct " << direct << " dB, traditional " << traditional << " dB");
  CHECK(traditional < direct);
}

TEST_CASE("traditional keeps a constant scene uniform") {
  const InstrumentProfile p = desk_profile();
  const ReconstructContext ctx = make_context(synthetic_instrument(p).params);
  const Cube scene = test::constant_cube(8, p.width, p.bands(), AxisKind::wavelength, p.id, 0.5);
  const SamplePair pair = synthesize_pair(scene, ctx.params, ctx.basis, {1, 0}, kDefaultTargetRate,
                                          NoiseMode::deterministic);
  const Cube out = reconstruct_traditional(pair.interferogram, ctx);
  double worst = 0.0;
  for (std::size_t k = 0; k < out.channels(); ++k) {
    double mean = 0.0;
    for (std::size_t h = 0; h < out.height(); ++h)
      for (std::size_t w = 0; w < out.width(); ++w) mean += out(h, w, k);
    mean /= static_cast<double>(out.height() * out.width());
    if (std::abs(mean) < 1e-9) continue;
    for (std::size_t h = 0; h < out.height(); ++h)
      for (std::size_t w = 0; w < out.width(); ++w)
        worst = std::max(worst, std::abs(out(h, w, k) - mean) / std::abs(mean));
  }
  MESSAGE("worst spatial deviation " << worst);
  CHECK(worst <= 0.01);
}

TEST_CASE("unfold fixed point and trace") {
  const InstrumentProfile p = desk_profile();
  const ReconstructContext ctx = make_context(synthetic_instrument(p).params);
  const SamplePair pair = noiseless(ctx.params, ctx.basis, 15);
  UnfoldConfig config;
  config.stages = 3;
  config.background = BackgroundMode::dark_background;
  const UnfoldResult r = unfold(pair.interferogram, ctx, config);
  CHECK(r.trace.size() == 4);
  for (double t : r.trace) CHECK(std::isfinite(t));
  CHECK(r.trace.back() <= 1.5 * r.trace.front());
  CHECK(test::relative_l2(r.spectrum, direct_spectrum(pair.interferogram, ctx)) <= 1e-8);
  CHECK(r.hsi.axis() == AxisKind::wavelength);

  UnfoldConfig soft = config;
  soft.prior = {{"id", "soft"}, {"tau", 0.0}};
  CHECK(test::max_abs_diff(unfold(pair.interferogram, ctx, soft).spectrum, r.spectrum) == 0.0);

  UnfoldConfig momentum = config;
  momentum.momentum = true;
  CHECK(test::relative_l2(unfold(pair.interferogram, ctx, momentum).spectrum, r.spectrum) <= 1e-8);
}

TEST_CASE("unfold step weight shapes") {
  const InstrumentProfile p = desk_profile();
  const ReconstructContext ctx = make_context(synthetic_instrument(p).params);
  const SamplePair pair = noiseless(ctx.params, ctx.basis, 16, 8);
  UnfoldConfig config;
  config.stages = 2;
  const Cube base = unfold(pair.interferogram, ctx, config).spectrum;

  config.alpha = StepWeights::from_json(std::vector<double>(p.width, 1.0));
  CHECK(config.alpha.kind == StepWeights::Kind::column);
  CHECK(test::max_abs_diff(unfold(pair.interferogram, ctx, config).spectrum, base) <= 1e-9);

  config.alpha = StepWeights::from_json(
      std::vector<std::vector<double>>(p.width, std::vector<double>(p.opd_samples(), 0.0)));
  CHECK(config.alpha.kind == StepWeights::Kind::map);
  CHECK(StepWeights::from_json(config.alpha.to_json()).values == config.alpha.values);
  CHECK(unfold(pair.interferogram, ctx, config).trace.size() == 3);

  config.alpha = StepWeights::from_json(std::vector<double>(p.width - 1, 1.0));
  CHECK_THROWS_AS(unfold(pair.interferogram, ctx, config), Error);
  config.alpha = StepWeights::from_json(-1.0);
  CHECK_THROWS_AS(unfold(pair.interferogram, ctx, config), Error);
  CHECK_THROWS_AS(StepWeights::from_json(nlohmann::json::array()), Error);
  config.alpha = StepWeights{};
  config.stages = 0;
  CHECK_THROWS_AS(unfold(pair.interferogram, ctx, config), Error);
}

TEST_CASE("prior failures carry the stage") {
  const InstrumentProfile p = desk_profile();
  const ReconstructContext ctx = make_context(synthetic_instrument(p).params);
  const SamplePair pair = noiseless(ctx.params, ctx.basis, 17, 8);
  UnfoldConfig config;
  FailingPrior failing;
  try {
    unfold(pair.interferogram, ctx, config, failing);
    FAIL("expected a prior failure");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::prior_failure);
    CHECK(e.field() == "stage 2");
  }
  ShrinkingPrior shrinking;
  try {
    unfold(pair.interferogram, ctx, config, shrinking);
    FAIL("expected a prior failure");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::prior_failure);
    CHECK(e.field() == "stage 0");
  }
}

TEST_CASE("unfold with TV beats the direct inverse on a stress scene") {
  const InstrumentProfile p = desk_profile();
  const ReconstructContext ctx = make_context(test::stress_params(p));
  const SamplePair pair = test::stress_pair(ctx.params, ctx.basis, 64, 21);
  UnfoldConfig config;
  config.stages = 5;
  config.prior = {{"id", "tv"}, {"lambda", "auto"}, {"iterations", 50}};
  const double direct = psnr(reconstruct_direct(pair.interferogram, ctx), pair.gt_hsi).db;
  const double tv = psnr(unfold(pair.interferogram, ctx, config).hsi, pair.gt_hsi).db;
  MESSAGE("direct " << direct << " dB, unfold+TV " << tv << " dB, margin " << tv - direct << " dB");
  CHECK(tv > direct);
}
