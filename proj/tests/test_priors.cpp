#include <doctest.h>

#include "ihi/error.hpp"
#include "ihi/priors.hpp"
#include "ihi/rng.hpp"
#include "support.hpp"

using namespace ihi;

namespace {

// Two flat halves with a step of 1 and Gaussian noise of sigma.
Cube noisy_step(std::size_t n, std::size_t channels, double sigma, Cube* clean) {
  Cube out(n, n, channels, AxisKind::wavenumber, "t", ScalarType::f64);
  *clean = out;
  for (std::size_t h = 0; h < n; ++h)
    for (std::size_t w = 0; w < n; ++w)
      for (std::size_t c = 0; c < channels; ++c) {
        const double v = w < n / 2 ? 1.0 : 2.0;
        (*clean)(h, w, c) = v;
        CounterRng rng({5, 0}, out.index(h, w, c));
        out(h, w, c) = v + sigma * rng.normal();
      }
  return out;
}

double mse(const Cube& a, const Cube& b) {
  double e = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a.values()[k] - b.values()[k];
    e += d * d;
  }
  return e / static_cast<double>(a.size());
}

}  // namespace

TEST_CASE("zero strength is identity") {
  const Cube x = test::random_cube(6, 5, 7, AxisKind::wavenumber, "t", 1);
  CHECK(test::max_abs_diff(soft_threshold(x, 0.0), x) <= 1e-15);
  CHECK(test::max_abs_diff(tv_denoise(x, 0.0, 50), x) == 0.0);
  IdentityPrior id;
  CHECK(test::max_abs_diff(id.denoise(x, 0), x) == 0.0);
}

TEST_CASE("constants pass through") {
  const Cube x = test::constant_cube(6, 5, 7, AxisKind::wavenumber, "t", 3.25);
  CHECK(test::max_abs_diff(soft_threshold(x, 0.5), x) <= 1e-12);
  CHECK(test::max_abs_diff(tv_denoise(x, 0.5, 50), x) <= 1e-12);
  TvPrior automatic(-1.0, 50);
  CHECK(test::max_abs_diff(automatic.denoise(x, 0), x) <= 1e-12);
}

TEST_CASE("soft threshold keeps channel means and shrinks differences") {
  const Cube x = test::random_cube(3, 4, 9, AxisKind::wavenumber, "t", 2);
  const Cube y = soft_threshold(x, 0.1);
  CHECK(y.same_shape(x));
  for (std::size_t h = 0; h < x.height(); ++h)
    for (std::size_t w = 0; w < x.width(); ++w) {
      double mx = 0.0, my = 0.0, tx = 0.0, ty = 0.0;
      for (std::size_t c = 0; c < x.channels(); ++c) {
        mx += x(h, w, c);
        my += y(h, w, c);
        if (c > 0) {
          tx += std::abs(x(h, w, c) - x(h, w, c - 1));
          ty += std::abs(y(h, w, c) - y(h, w, c - 1));
        }
      }
      CHECK(my == doctest::Approx(mx).epsilon(1e-12));
      CHECK(ty <= tx);
    }
  // A huge threshold flattens every pixel to its mean.
  const Cube flat = soft_threshold(x, 1e9);
  for (std::size_t c = 1; c < x.channels(); ++c) CHECK(flat(0, 0, c) == doctest::Approx(flat(0, 0, 0)));
  CHECK_THROWS_AS(SoftThresholdPrior(-1.0), Error);
}

TEST_CASE("TV lowers the error on a noisy step") {
  Cube clean;
  const Cube noisy = noisy_step(32, 2, 0.1, &clean);
  const Cube denoised = tv_denoise(noisy, 0.1, 100);
  MESSAGE("MSE " << mse(noisy, clean) << " -> " << mse(denoised, clean));
  CHECK(mse(denoised, clean) < mse(noisy, clean));

  TvPrior automatic(-1.0, 100);
  CHECK(mse(automatic.denoise(noisy, 0), clean) < mse(noisy, clean));
}

TEST_CASE("noise estimate") {
  Cube clean;
  const Cube noisy = noisy_step(64, 1, 0.1, &clean);
  const auto sigma = channel_noise_mad(noisy);
  REQUIRE(sigma.size() == 1);
  CHECK(sigma[0] == doctest::Approx(0.1).epsilon(0.1));
  CHECK(channel_noise_mad(clean)[0] == 0.0);
}

TEST_CASE("prior factory") {
  CHECK(make_prior({{"id", "identity"}})->id() == "identity");
  CHECK(make_prior({{"id", "soft"}, {"tau", 0.2}})->describe()["tau"] == 0.2);
  const auto tv = make_prior({{"id", "tv"}, {"lambda", "auto"}, {"iterations", 10}});
  CHECK(tv->describe()["lambda"] == "auto");
  CHECK(make_prior({{"id", "tv"}, {"lambda", 0.3}})->describe()["lambda"] == 0.3);
  CHECK_THROWS_AS(make_prior({{"id", "tv"}, {"lambda", "big"}}), Error);
  CHECK_THROWS_AS(make_prior({{"id", "unknown"}}), Error);
}

TEST_CASE("priors keep shape and finiteness") {
  const Cube x = test::random_cube(5, 6, 4, AxisKind::wavenumber, "t", 3, -1.0, 1.0);
  for (const char* id : {"identity", "soft", "tv"}) {
    auto prior = make_prior({{"id", id}, {"tau", 0.1}});
    const Cube y = prior->denoise(x, 1);
    CHECK(y.same_shape(x));
    CHECK(y.axis() == x.axis());
    CHECK(y.all_finite());
  }
}
