#include <doctest.h>

#include <chrono>
#include <limits>
#include <set>

#include "ihi/degrade.hpp"
#include "ihi/error.hpp"
#include "ihi/instrument.hpp"
#include "ihi/io.hpp"
#include "ihi/resample.hpp"
#include "ihi/synthesize.hpp"
#include "ihi/transform.hpp"
#include "support.hpp"

using namespace ihi;

namespace {

void write_sources(const InstrumentProfile& p, const std::filesystem::path& dir, std::size_t count,
                   std::size_t height) {
  std::filesystem::create_directories(dir);
  for (std::size_t k = 0; k < count; ++k)
    write_cube(synthetic_scene(p, height, p.width, 100 + k), p,
               dir / ("scene_" + std::to_string(k) + ".ihic"));
}

}  // namespace

TEST_CASE("patch counts") {
  const Cube a(256, 256, 1, AxisKind::wavelength, "t");
  CHECK(make_patches(a, 256, 256, 256).size() == 1);
  const Cube b(512, 512, 1, AxisKind::wavelength, "t");
  const auto pb = make_patches(b, 256, 256, 256);
  REQUIRE(pb.size() == 4);
  CHECK(pb[3].row == 256);
  CHECK(pb[3].col == 256);
  const Cube c(300, 300, 1, AxisKind::wavelength, "t");
  CHECK(make_patches(c, 256, 256, 256).size() == 1);
  CHECK_THROWS_AS(make_patches(c, 400, 256, 256), Error);
}

TEST_CASE("patch content is a crop") {
  const Cube src = test::random_cube(8, 6, 2, AxisKind::wavelength, "t", 1);
  const auto patches = make_patches(src, 4, 3, 2);
  CHECK(patches.size() == 3 * 2);
  for (const Patch& pt : patches)
    for (std::size_t h = 0; h < 4; ++h)
      for (std::size_t w = 0; w < 3; ++w)
        for (std::size_t k = 0; k < 2; ++k) CHECK(pt.cube(h, w, k) == src(pt.row + h, pt.col + w, k));
}

TEST_CASE("photometric scale") {
  const InstrumentProfile p = desk_profile();
  const Cube half = test::constant_cube(4, p.width, p.bands(), AxisKind::wavelength, p.id, 0.5);
  const ScaledPatch s = photometric_scale(half, p, 1e4);
  CHECK(s.factor == doctest::Approx(2e4).epsilon(1e-12));

  const Cube x = test::random_cube(4, p.width, p.bands(), AxisKind::wavelength, p.id, 2, 0.1, 1.0);
  const ScaledPatch sx = photometric_scale(x, p, 1e4);
  const Cube back = unscale(sx.hsi, sx.factor);
  for (std::size_t k = 0; k < x.size(); ++k)
    CHECK(std::abs(back.values()[k] - x.values()[k]) <= std::numeric_limits<double>::epsilon() * x.values()[k]);

  // The target is met on in-band wavenumber bins, not on wavelength channels.
  const Cube nu = resample_hsi_to_wavenumber(sx.hsi, p);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t h = 0; h < nu.height(); ++h)
    for (std::size_t w = 0; w < nu.width(); ++w)
      for (std::size_t j = 0; j < p.wavenumbers(); ++j)
        if (p.in_band(p.nu_per_nm[j])) {
          sum += nu(h, w, j);
          ++n;
        }
  CHECK(sum / static_cast<double>(n) == doctest::Approx(1e4).epsilon(1e-12));

  const Cube zero(2, p.width, p.bands(), AxisKind::wavelength, p.id);
  CHECK_THROWS_AS(photometric_scale(zero, p), Error);
}

TEST_CASE("sample synthesis") {
  const InstrumentProfile p = desk_profile();
  const TransformBasis t = build_basis(p);
  const DegradationParams params = synthetic_instrument(p).params;
  const Cube hsi = synthetic_scene(p, p.width, p.width, 3);
  const SamplePair a = synthesize_pair(hsi, params, t, {9, 1});
  const SamplePair b = synthesize_pair(hsi, params, t, {9, 1});
  CHECK(encode_cube(a.interferogram) == encode_cube(b.interferogram));
  CHECK(a.interferogram.storage() == ScalarType::f32);
  CHECK(a.gt_nu.storage() == ScalarType::f64);
  CHECK(a.interferogram.axis() == AxisKind::opd);
  CHECK(a.gt_hsi.axis() == AxisKind::wavelength);

  DegradationParams quiet = params;
  quiet.e = 0.0;
  quiet.sigma_read.setZero();
  const SamplePair d = synthesize_pair(hsi, quiet, t, {9, 1}, kDefaultTargetRate, NoiseMode::deterministic);
  const Cube expect =
      electronic_degrade(optical_degrade(d.gt_nu, quiet, t), unit_electronic_state(quiet), {9, 1},
                         NoiseMode::deterministic);
  CHECK(test::max_abs_diff(d.interferogram, expect) == 0.0);
}

TEST_CASE("dataset split, replay and budget") {
  test::TempDir dir("ds");
  const InstrumentProfile p = desk_profile();
  const DegradationParams params = synthetic_instrument(p).params;
  write_sources(p, dir / "src", 2, 4 * p.width);
  DatasetConfig config;
  config.test_count = 1;
  const auto t0 = std::chrono::steady_clock::now();
  const DatasetManifest m = make_dataset(dir / "src", params, config, dir / "ds");
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::size_t train = 0, test_n = 0;
  std::set<std::string> train_sources, test_sources;
  for (const auto& s : m.samples) {
    if (s.split == "train") {
      ++train;
      train_sources.insert(s.source);
    } else {
      ++test_n;
      test_sources.insert(s.source);
    }
  }
  CHECK(train == 4);
  CHECK(test_n == 1);
  CHECK(train + test_n <= 8);
  CHECK(seconds <= 10.0);
  CHECK(test_sources == std::set<std::string>{"scene_1"});
  for (const auto& s : test_sources) CHECK(train_sources.count(s) == 0);

  const DatasetManifest back = read_manifest(dir / "ds");
  CHECK(back.to_json() == m.to_json());
  CHECK(verify_dataset(dir / "ds").empty());

  // Tampering with one file is detected.
  const SampleFiles f = sample_files(dir / "ds", m.samples.front());
  auto bytes = read_file_bytes(f.interf);
  bytes.back() ^= std::byte{1};
  write_file_bytes(f.interf, bytes);
  CHECK(verify_dataset(dir / "ds") == std::vector<std::string>{m.samples.front().id});
}

TEST_CASE("eight patches synthesize within ten seconds") {
  test::TempDir dir("ds8");
  const InstrumentProfile p = desk_profile();
  const DegradationParams params = synthetic_instrument(p).params;
  write_sources(p, dir / "src", 1, 8 * p.width);
  DatasetConfig config;
  config.test_count = 0;
  const auto t0 = std::chrono::steady_clock::now();
  const DatasetManifest m = make_dataset(dir / "src", params, config, dir / "ds");
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(m.samples.size() == 8);
  CHECK(seconds <= 10.0);
}

TEST_CASE("explicit held-out source") {
  test::TempDir dir("dsx");
  const InstrumentProfile p = desk_profile();
  const DegradationParams params = synthetic_instrument(p).params;
  write_sources(p, dir / "src", 3, p.width);
  DatasetConfig config;
  config.test_sources = {"scene_0"};
  const DatasetManifest m = make_dataset(dir / "src", params, config, dir / "ds");
  for (const auto& s : m.samples) CHECK((s.split == "test") == (s.source == "scene_0"));
  config.test_sources = {"missing"};
  CHECK_THROWS_AS(make_dataset(dir / "src", params, config, dir / "ds2"), Error);
}
