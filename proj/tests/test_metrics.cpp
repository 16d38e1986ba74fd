#include <doctest.h>

#include "ihi/error.hpp"
#include "ihi/evaluate.hpp"
#include "ihi/metrics.hpp"
#include "support.hpp"

using namespace ihi;

namespace {

Cube offset(const Cube& x, double c) {
  Cube out = x;
  for (double& v : out.values()) v += c;
  return out;
}

Cube binary_image(std::size_t n) {
  Cube out(n, n, 2, AxisKind::wavelength, "t", ScalarType::f64);
  for (std::size_t h = 0; h < n; ++h)
    for (std::size_t w = 0; w < n; ++w)
      for (std::size_t c = 0; c < 2; ++c) out(h, w, c) = ((h / 4 + w / 4 + c) % 2) ? 1.0 : 0.0;
  return out;
}

}  // namespace

TEST_CASE("psnr identities") {
  const Cube ref = test::random_cube(8, 8, 3, AxisKind::wavelength, "t", 1);
  CHECK(psnr(ref, ref).infinite);

  const Cube ones = test::constant_cube(4, 4, 2, AxisKind::wavelength, "t", 1.0);
  const Cube nines = test::constant_cube(4, 4, 2, AxisKind::wavelength, "t", 0.9);
  const PsnrValue v = psnr(nines, ones, 1.0);
  CHECK(!v.infinite);
  CHECK(v.db == doctest::Approx(20.0).epsilon(1e-12));
  CHECK(psnr(nines, ones).db == doctest::Approx(20.0).epsilon(1e-12));

  const Cube x = test::random_cube(8, 8, 3, AxisKind::wavelength, "t", 2);
  const double base = psnr(x, ref, 1.0).db;
  for (double c : {-0.5, 3.0, 100.0})
    CHECK(psnr(offset(x, c), offset(ref, c), 1.0).db == doctest::Approx(base).epsilon(1e-9));

  const Cube other(8, 8, 4, AxisKind::wavelength, "t");
  CHECK_THROWS_AS(psnr(other, ref), Error);
  CHECK_THROWS_AS(psnr(x, ref, 0.0), Error);
}

TEST_CASE("report formatting uses two decimals") {
  EvalReport r;
  r.method = "fprime";
  r.scenes.push_back({"test/0000", {39.4567, false}, 0.99213, 0.1});
  r.mean_psnr = mean_psnr(r.scenes);
  r.mean_ssim = 0.99213;
  const std::string table = r.table();
  CHECK(table.find("39.46") != std::string::npos);
  CHECK(table.find("0.9921") != std::string::npos);
}

TEST_CASE("ssim identities") {
  const Cube ref = test::random_cube(16, 16, 3, AxisKind::wavelength, "t", 3);
  CHECK(ssim(ref, ref) == doctest::Approx(1.0).epsilon(1e-12));

  const Cube bin = binary_image(24);
  Cube inverse = bin;
  for (double& v : inverse.values()) v = 1.0 - v;
  const double s = ssim(inverse, bin);
  MESSAGE("inverse SSIM " << s);
  CHECK(s < 0.1);

  const Cube a = test::constant_cube(12, 12, 2, AxisKind::wavelength, "t", 0.4);
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));

  const Cube x = test::random_cube(16, 16, 3, AxisKind::wavelength, "t", 4);
  SsimOptions fixed;
  fixed.peak = 1.0;
  CHECK(std::abs(ssim(x, ref, fixed) - ssim(ref, x, fixed)) <= 1e-12);
  const double value = ssim(x, ref);
  CHECK(value >= -1.0);
  CHECK(value <= 1.0);

  const Cube small = test::random_cube(10, 16, 1, AxisKind::wavelength, "t", 5);
  CHECK_THROWS_AS(ssim(small, small), Error);
}

TEST_CASE("mean psnr") {
  std::vector<SceneScore> s = {{"a", {20.0, false}, 0.5, 0.0}, {"b", {30.0, false}, 0.7, 0.0}};
  CHECK(mean_psnr(s).db == 25.0);
  s.push_back({"c", {0.0, true}, 1.0, 0.0});
  CHECK(mean_psnr(s).infinite);
}
