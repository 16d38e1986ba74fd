#pragma once

// IHIC array container:
//   "IHIC" | u16 version=1 | u8 dtype (1=f32, 2=f64) | u8 ndim | ndim x u32 dims
//   | row-major payload, last dimension fastest. All little-endian.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "ihi/cube.hpp"

namespace ihi {

inline constexpr std::uint16_t kIhicVersion = 1;
inline constexpr std::uint64_t kMaxPayloadBytes = std::uint64_t{1} << 40;

struct RawArray {
  ScalarType dtype = ScalarType::f32;
  std::vector<std::uint32_t> dims;
  std::vector<double> values;
};

std::vector<std::byte> encode_array(std::span<const std::uint32_t> dims,
                                    std::span<const double> values, ScalarType dtype);
RawArray decode_array(std::span<const std::byte> bytes);

std::vector<std::byte> encode_cube(const Cube& cube);
Cube decode_cube(std::span<const std::byte> bytes, AxisKind axis, const std::string& profile_id);

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::byte> bytes);

void write_array(const std::filesystem::path& path, std::span<const std::uint32_t> dims,
                 std::span<const double> values, ScalarType dtype);
RawArray read_array(const std::filesystem::path& path);

/// `<dir>/<name>.ihic` -> `<dir>/<name>.json`
std::filesystem::path sidecar_path(const std::filesystem::path& path);

/// Writes the payload and a JSON sidecar carrying the axis kind and grids.
void write_cube(const Cube& cube, const InstrumentProfile& profile,
                const std::filesystem::path& path);

struct CubeFile {
  Cube cube;
  std::optional<InstrumentProfile> profile;
};

/// Reads a rank-3 payload; the sidecar supplies axis kind and profile when
/// present, otherwise the cube is tagged as wavelength with no profile.
CubeFile read_cube_file(const std::filesystem::path& path);
Cube read_cube(const std::filesystem::path& path);

void write_map(const std::filesystem::path& path, const Map2& map,
               ScalarType dtype = ScalarType::f64);
Map2 read_map(const std::filesystem::path& path);

void write_vector(const std::filesystem::path& path, std::span<const double> values,
                  ScalarType dtype = ScalarType::f64);
std::vector<double> read_vector(const std::filesystem::path& path);

}  // namespace ihi
