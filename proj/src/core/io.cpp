#include "ihi/io.hpp"

#include <bit>
#include <cmath>
#include <fstream>

#include "ihi/error.hpp"

namespace ihi {

namespace fs = std::filesystem;

namespace {

constexpr std::byte kMagic[4] = {std::byte{'I'}, std::byte{'H'}, std::byte{'I'}, std::byte{'C'}};

template <typename UInt>
void put_le(std::vector<std::byte>& out, UInt v) {
  for (std::size_t i = 0; i < sizeof(UInt); ++i)
    out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xFFu));
}

template <typename UInt>
UInt get_le(std::span<const std::byte> bytes, std::size_t offset) {
  UInt v = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i)
    v |= static_cast<UInt>(std::to_integer<unsigned>(bytes[offset + i])) << (8 * i);
  return v;
}

std::size_t dtype_size(ScalarType dtype) { return dtype == ScalarType::f32 ? 4 : 8; }

nlohmann::json cube_sidecar(const Cube& cube, const InstrumentProfile& profile) {
  nlohmann::json j;
  j["axis_kind"] = axis_name(cube.axis());
  j["profile"] = profile.id;
  j["H"] = cube.height();
  j["W"] = cube.width();
  j["C"] = cube.channels();
  j["lambda_nm"] = profile.lambda_nm;
  j["nu_per_nm"] = profile.nu_per_nm;
  j["opd_nm"] = profile.opd_nm;
  j["center_index"] = profile.center_index;
  j["opd_step_nm"] = profile.opd_step_nm;
  j["nu_step_per_nm"] = profile.nu_step_per_nm;
  return j;
}

}  // namespace

std::vector<std::byte> encode_array(std::span<const std::uint32_t> dims,
                                    std::span<const double> values, ScalarType dtype) {
  require(!dims.empty() && dims.size() <= 3, Errc::bad_ndim, "ndim must be 1, 2 or 3", "ndim");
  std::uint64_t count = 1;
  for (auto d : dims) count *= d;
  require(count == values.size(), Errc::shape_mismatch, "dims do not match value count", "dims");
  for (double v : values)
    require(std::isfinite(v), Errc::non_finite, "refusing to write NaN or Inf", "payload");

  std::vector<std::byte> out;
  out.reserve(8 + 4 * dims.size() + values.size() * dtype_size(dtype));
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_le<std::uint16_t>(out, kIhicVersion);
  out.push_back(static_cast<std::byte>(dtype));
  out.push_back(static_cast<std::byte>(dims.size()));
  for (auto d : dims) put_le<std::uint32_t>(out, d);

  if (dtype == ScalarType::f32) {
    for (double v : values) {
      const float f = static_cast<float>(v);
      require(std::isfinite(f), Errc::non_finite, "value overflows 32-bit float", "payload");
      put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(f));
    }
  } else {
    for (double v : values) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

RawArray decode_array(std::span<const std::byte> bytes) {
  require(bytes.size() >= 8, Errc::truncated_payload, "header shorter than 8 bytes", "header");
  require(std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin()), Errc::bad_magic,
          "expected 'IHIC'", "magic");
  const auto version = get_le<std::uint16_t>(bytes, 4);
  require(version == kIhicVersion, Errc::version_mismatch,
          "unsupported version " + std::to_string(version), "version");
  const auto dtype_code = std::to_integer<unsigned>(bytes[6]);
  require(dtype_code == 1 || dtype_code == 2, Errc::bad_dtype,
          "unknown dtype code " + std::to_string(dtype_code), "dtype_code");
  const auto ndim = std::to_integer<unsigned>(bytes[7]);
  require(ndim >= 1 && ndim <= 3, Errc::bad_ndim, "ndim must be 1, 2 or 3", "ndim");
  require(bytes.size() >= 8 + 4 * ndim, Errc::truncated_payload, "dims truncated", "dims");

  RawArray out;
  out.dtype = static_cast<ScalarType>(dtype_code);
  std::uint64_t count = 1;
  const std::uint64_t elem = dtype_size(out.dtype);
  for (unsigned k = 0; k < ndim; ++k) {
    const auto d = get_le<std::uint32_t>(bytes, 8 + 4 * k);
    out.dims.push_back(d);
    if (d != 0 && count > kMaxPayloadBytes / elem / d)
      fail(Errc::dim_overflow, "payload size exceeds 2^40 bytes", "dims");
    count *= d;
  }
  const std::size_t offset = 8 + 4 * ndim;
  const std::uint64_t payload = count * elem;
  require(bytes.size() - offset >= payload, Errc::truncated_payload,
          "payload has " + std::to_string(bytes.size() - offset) + " bytes, header requires " +
              std::to_string(payload),
          "payload");
  require(bytes.size() - offset == payload, Errc::trailing_bytes,
          "unexpected bytes after payload", "payload");

  out.values.resize(count);
  if (out.dtype == ScalarType::f32) {
    for (std::size_t k = 0; k < count; ++k)
      out.values[k] = std::bit_cast<float>(get_le<std::uint32_t>(bytes, offset + 4 * k));
  } else {
    for (std::size_t k = 0; k < count; ++k)
      out.values[k] = std::bit_cast<double>(get_le<std::uint64_t>(bytes, offset + 8 * k));
  }
  return out;
}

std::vector<std::byte> encode_cube(const Cube& cube) {
  const std::uint32_t dims[3] = {static_cast<std::uint32_t>(cube.height()),
                                 static_cast<std::uint32_t>(cube.width()),
                                 static_cast<std::uint32_t>(cube.channels())};
  return encode_array(dims, cube.values(), cube.storage());
}

Cube decode_cube(std::span<const std::byte> bytes, AxisKind axis, const std::string& profile_id) {
  RawArray raw = decode_array(bytes);
  require(raw.dims.size() == 3, Errc::bad_ndim, "cube payload must have ndim = 3", "ndim");
  return Cube(raw.dims[0], raw.dims[1], raw.dims[2], axis, profile_id, std::move(raw.values),
              raw.dtype);
}

std::vector<std::byte> read_file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) fail(Errc::io, "cannot open for reading", path.string());
  const auto size = static_cast<std::size_t>(in.tellg());
  std::vector<std::byte> bytes(size);
  in.seekg(0);
  if (size > 0 && !in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size)))
    fail(Errc::io, "short read", path.string());
  return bytes;
}

void write_file_bytes(const fs::path& path, std::span<const std::byte> bytes) {
  if (path.has_parent_path() && !fs::exists(path.parent_path()))
    fail(Errc::io, "parent directory does not exist", path.parent_path().string());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::io, "cannot open for writing", path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(Errc::io, "write failed", path.string());
}

void write_array(const fs::path& path, std::span<const std::uint32_t> dims,
                 std::span<const double> values, ScalarType dtype) {
  write_file_bytes(path, encode_array(dims, values, dtype));
}

RawArray read_array(const fs::path& path) {
  try {
    return decode_array(read_file_bytes(path));
  } catch (const Error& e) {
    if (e.code() == Errc::io) throw;
    throw Error(e.code(), std::string(e.what()) + " (in " + path.string() + ")", e.field());
  }
}

fs::path sidecar_path(const fs::path& path) {
  fs::path out = path;
  out.replace_extension(".json");
  return out;
}

void write_cube(const Cube& cube, const InstrumentProfile& profile, const fs::path& path) {
  expect_finite(cube, "cube");
  require(cube.channels() == profile.channels(cube.axis()), Errc::shape_mismatch,
          "channel count does not match the profile grid", "C");
  write_file_bytes(path, encode_cube(cube));
  const std::string text = cube_sidecar(cube, profile).dump(1);
  std::ofstream side(sidecar_path(path), std::ios::trunc);
  if (!side) fail(Errc::io, "cannot write sidecar", sidecar_path(path).string());
  side << text << '\n';
}

CubeFile read_cube_file(const fs::path& path) {
  RawArray raw = read_array(path);
  require(raw.dims.size() == 3, Errc::bad_ndim, "cube file must have ndim = 3", "ndim");

  CubeFile out;
  AxisKind axis = AxisKind::wavelength;
  std::string profile_id;
  const fs::path side = sidecar_path(path);
  if (fs::exists(side)) {
    std::ifstream in(side);
    nlohmann::json j;
    try {
      in >> j;
      axis = parse_axis(j.at("axis_kind").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      fail(Errc::io, std::string("malformed sidecar: ") + e.what(), side.string());
    }
    out.profile = profile_from_json(j);
    profile_id = out.profile->id;
    require(out.profile->channels(axis) == raw.dims[2], Errc::shape_mismatch,
            "sidecar grid does not match channel count", "C");
  }
  out.cube = Cube(raw.dims[0], raw.dims[1], raw.dims[2], axis, profile_id, std::move(raw.values),
                  raw.dtype);
  return out;
}

Cube read_cube(const fs::path& path) { return read_cube_file(path).cube; }

void write_map(const fs::path& path, const Map2& map, ScalarType dtype) {
  const std::uint32_t dims[2] = {static_cast<std::uint32_t>(map.rows()),
                                 static_cast<std::uint32_t>(map.cols())};
  write_array(path, dims, std::span<const double>(map.data(), static_cast<std::size_t>(map.size())),
              dtype);
}

Map2 read_map(const fs::path& path) {
  RawArray raw = read_array(path);
  require(raw.dims.size() == 2, Errc::bad_ndim, "parameter map must have ndim = 2 (" +
                                                    path.string() + ")",
          "ndim");
  Map2 map(raw.dims[0], raw.dims[1]);
  std::copy(raw.values.begin(), raw.values.end(), map.data());
  return map;
}

void write_vector(const fs::path& path, std::span<const double> values, ScalarType dtype) {
  const std::uint32_t dims[1] = {static_cast<std::uint32_t>(values.size())};
  write_array(path, dims, values, dtype);
}

std::vector<double> read_vector(const fs::path& path) {
  RawArray raw = read_array(path);
  require(raw.dims.size() == 1, Errc::bad_ndim, "spectrum must have ndim = 1 (" + path.string() + ")",
          "ndim");
  return std::move(raw.values);
}

}  // namespace ihi
