#include "ihi/cube.hpp"

#include <algorithm>
#include <cmath>

#include "ihi/error.hpp"

namespace ihi {

Cube::Cube(std::size_t height, std::size_t width, std::size_t channels, AxisKind axis,
           std::string profile_id, ScalarType storage)
    : height_(height),
      width_(width),
      channels_(channels),
      axis_(axis),
      profile_id_(std::move(profile_id)),
      storage_(storage),
      values_(height * width * channels, 0.0) {}

Cube::Cube(std::size_t height, std::size_t width, std::size_t channels, AxisKind axis,
           std::string profile_id, std::vector<double> values, ScalarType storage)
    : height_(height),
      width_(width),
      channels_(channels),
      axis_(axis),
      profile_id_(std::move(profile_id)),
      storage_(storage),
      values_(std::move(values)) {
  require(values_.size() == height * width * channels, Errc::shape_mismatch,
          "value count does not match H*W*C", "values");
}

bool Cube::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

Cube Cube::like(AxisKind axis, std::size_t channels) const {
  return Cube(height_, width_, channels, axis, profile_id_, storage_);
}

Cube Cube::rounded_to_f32() const {
  Cube out = *this;
  for (double& v : out.values_) v = static_cast<double>(static_cast<float>(v));
  out.storage_ = ScalarType::f32;
  return out;
}

void expect_axis(const Cube& cube, AxisKind axis, std::size_t channels, const char* what) {
  if (cube.axis() != axis)
    fail(Errc::axis_mismatch,
         std::string("expected ") + axis_name(axis) + " cube, got " + axis_name(cube.axis()), what);
  if (cube.channels() != channels)
    fail(Errc::shape_mismatch,
         "expected " + std::to_string(channels) + " channels, got " +
             std::to_string(cube.channels()),
         what);
}

void expect_finite(const Cube& cube, const char* what) {
  if (!cube.all_finite()) fail(Errc::non_finite, "cube contains NaN or Inf", what);
}

}  // namespace ihi
