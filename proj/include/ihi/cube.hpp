#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ihi/profile.hpp"

namespace ihi {

/// Per-(W, L) or per-(W, N) parameter map, row index = detector column.
using Map2 = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ComplexMap2 =
    Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class ScalarType : std::uint8_t { f32 = 1, f64 = 2 };

/// Rank-3 real cube, H rows x W columns x C channels, channel fastest. Values
/// are held in double precision; `storage` selects the on-disk payload type.
class Cube {
 public:
  Cube() = default;
  Cube(std::size_t height, std::size_t width, std::size_t channels, AxisKind axis,
       std::string profile_id, ScalarType storage = ScalarType::f32);
  Cube(std::size_t height, std::size_t width, std::size_t channels, AxisKind axis,
       std::string profile_id, std::vector<double> values, ScalarType storage = ScalarType::f32);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t channels() const { return channels_; }
  std::size_t size() const { return values_.size(); }
  AxisKind axis() const { return axis_; }
  const std::string& profile_id() const { return profile_id_; }
  ScalarType storage() const { return storage_; }
  void set_storage(ScalarType storage) { storage_ = storage; }

  std::size_t index(std::size_t h, std::size_t w, std::size_t c) const {
    return (h * width_ + w) * channels_ + c;
  }
  double& operator()(std::size_t h, std::size_t w, std::size_t c) { return values_[index(h, w, c)]; }
  double operator()(std::size_t h, std::size_t w, std::size_t c) const {
    return values_[index(h, w, c)];
  }

  std::span<double> pixel(std::size_t h, std::size_t w) {
    return {values_.data() + index(h, w, 0), channels_};
  }
  std::span<const double> pixel(std::size_t h, std::size_t w) const {
    return {values_.data() + index(h, w, 0), channels_};
  }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  bool all_finite() const;
  bool same_shape(const Cube& other) const {
    return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
  }

  /// Same H and W, new axis and channel count, zero filled.
  Cube like(AxisKind axis, std::size_t channels) const;

  /// Copy with every value rounded through 32-bit float.
  Cube rounded_to_f32() const;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::size_t channels_ = 0;
  AxisKind axis_ = AxisKind::wavelength;
  std::string profile_id_;
  ScalarType storage_ = ScalarType::f32;
  std::vector<double> values_;
};

/// Throws Errc::axis_mismatch / Errc::shape_mismatch with `what` as context.
void expect_axis(const Cube& cube, AxisKind axis, std::size_t channels, const char* what);
void expect_finite(const Cube& cube, const char* what);

}  // namespace ihi
