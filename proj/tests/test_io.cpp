#include <doctest.h>

#include <cstring>
#include <limits>

#include "ihi/error.hpp"
#include "ihi/io.hpp"
#include "support.hpp"

using namespace ihi;
using ihi::test::TempDir;

namespace {

Errc decode_error(const std::vector<std::byte>& bytes) {
  try {
    decode_array(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::numerical;
}

std::vector<std::byte> header(std::uint8_t dtype, std::vector<std::uint32_t> dims) {
  std::vector<std::byte> out = {std::byte{'I'}, std::byte{'H'}, std::byte{'I'}, std::byte{'C'},
                                std::byte{1},   std::byte{0},   std::byte{dtype},
                                static_cast<std::byte>(dims.size())};
  for (auto d : dims)
    for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::byte>((d >> (8 * k)) & 0xff));
  return out;
}

}  // namespace

TEST_CASE("zero cube round trips") {
  TempDir dir("io");
  const InstrumentProfile p = desk_profile();
  Cube zeros(3, 4, 5, AxisKind::wavelength, p.id);
  const auto bytes = encode_cube(zeros);
  const Cube back = decode_cube(bytes, AxisKind::wavelength, p.id);
  CHECK(back.height() == 3);
  CHECK(back.width() == 4);
  CHECK(back.channels() == 5);
  for (double v : back.values()) CHECK(v == 0.0);
}

TEST_CASE("write then read is bit identical") {
  TempDir dir("io");
  const InstrumentProfile p = desk_profile();
  for (ScalarType st : {ScalarType::f32, ScalarType::f64}) {
    Cube c = test::random_cube(5, p.width, p.bands(), AxisKind::wavelength, p.id, 3, -10.0, 10.0);
    c.set_storage(st);
    if (st == ScalarType::f32) c = c.rounded_to_f32();
    const auto path = dir / "c.ihic";
    write_cube(c, p, path);
    const CubeFile f = read_cube_file(path);
    REQUIRE(f.profile.has_value());
    CHECK(f.profile->same_grids(p));
    CHECK(f.cube.axis() == AxisKind::wavelength);
    REQUIRE(f.cube.size() == c.size());
    CHECK(std::memcmp(f.cube.values().data(), c.values().data(), c.size() * sizeof(double)) == 0);
    CHECK(encode_cube(f.cube) == encode_cube(c));
  }
}

TEST_CASE("non-finite values are rejected on write") {
  const InstrumentProfile p = desk_profile();
  Cube c(3, 4, 5, AxisKind::wavelength, p.id);
  c(1, 2, 3) = std::numeric_limits<double>::quiet_NaN();
  try {
    encode_cube(c);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::non_finite);
  }
}

TEST_CASE("header violations") {
  auto truncated = header(1, {2, 2, 2});
  truncated.resize(truncated.size() + 7 * 4);
  CHECK(decode_error(truncated) == Errc::truncated_payload);

  auto trailing = header(1, {2, 2, 2});
  trailing.resize(trailing.size() + 9 * 4);
  CHECK(decode_error(trailing) == Errc::trailing_bytes);

  auto magic = header(1, {1});
  magic.resize(magic.size() + 4);
  magic[0] = std::byte{'X'};
  CHECK(decode_error(magic) == Errc::bad_magic);

  auto version = header(1, {1});
  version.resize(version.size() + 4);
  version[4] = std::byte{9};
  CHECK(decode_error(version) == Errc::version_mismatch);

  auto dtype = header(7, {1});
  dtype.resize(dtype.size() + 4);
  CHECK(decode_error(dtype) == Errc::bad_dtype);

  CHECK(decode_error(header(1, {1, 1, 1, 1})) == Errc::bad_ndim);
  CHECK(decode_error(header(2, {0xffffffffu, 0xffffffffu, 0xffffu})) == Errc::dim_overflow);
  CHECK(decode_error({std::byte{'I'}, std::byte{'H'}}) == Errc::truncated_payload);
}

TEST_CASE("exact payload decodes") {
  auto ok = header(1, {2, 2, 2});
  ok.resize(ok.size() + 8 * 4);
  const RawArray raw = decode_array(ok);
  CHECK(raw.dims.size() == 3);
  CHECK(raw.values.size() == 8);
}

TEST_CASE("maps and vectors round trip") {
  TempDir dir("io");
  Map2 m(3, 4);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = 0.1 * static_cast<double>(k) - 0.3;
  write_map(dir / "m.ihic", m);
  CHECK(read_map(dir / "m.ihic") == m);
  const std::vector<double> v = {1.5, -2.25, 3.0};
  write_vector(dir / "v.ihic", v);
  CHECK(read_vector(dir / "v.ihic") == v);
  CHECK_THROWS_AS(read_map(dir / "v.ihic"), Error);
}

TEST_CASE("missing file reports the path") {
  try {
    read_cube("/nonexistent/dir/x.ihic");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::io);
    CHECK(std::string(e.what()).find("/nonexistent/dir/x.ihic") != std::string::npos);
  }
}

TEST_CASE("sidecar channel count must match the axis") {
  TempDir dir("io");
  const InstrumentProfile p = desk_profile();
  Cube wrong(2, 2, 5, AxisKind::wavelength, p.id);
  CHECK_THROWS_AS(write_cube(wrong, p, dir / "w.ihic"), Error);
}
