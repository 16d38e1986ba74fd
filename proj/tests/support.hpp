#pragma once

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <unistd.h>

#include "ihi/cube.hpp"
#include "ihi/instrument.hpp"
#include "ihi/params.hpp"
#include "ihi/profile.hpp"
#include "ihi/rng.hpp"
#include "ihi/synthesize.hpp"

namespace ihi::test {

// Scratch directory removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("ihi_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline Cube random_cube(std::size_t h, std::size_t w, std::size_t c, AxisKind axis,
                        const std::string& profile_id, std::uint64_t seed, double lo = 0.0,
                        double hi = 1.0) {
  Cube out(h, w, c, axis, profile_id, ScalarType::f64);
  auto v = out.values();
  for (std::size_t k = 0; k < v.size(); ++k) {
    CounterRng rng({seed, 0}, k);
    v[k] = lo + (hi - lo) * rng.uniform();
  }
  return out;
}

inline Cube constant_cube(std::size_t h, std::size_t w, std::size_t c, AxisKind axis,
                          const std::string& profile_id, double value) {
  Cube out(h, w, c, axis, profile_id, ScalarType::f64);
  for (double& x : out.values()) x = value;
  return out;
}

inline bool all_equal(const Cube& c, double value) {
  for (double v : c.values())
    if (v != value) return false;
  return true;
}

inline double relative_l2(const Cube& x, const Cube& ref) {
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < ref.size(); ++k) {
    const double d = x.values()[k] - ref.values()[k];
    num += d * d;
    den += ref.values()[k] * ref.values()[k];
  }
  return den > 0 ? std::sqrt(num / den) : std::sqrt(num);
}

inline double max_abs_diff(const Cube& a, const Cube& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    m = std::max(m, std::abs(a.values()[k] - b.values()[k]));
  return m;
}

// Stress configuration: shot noise at 1e3 counts per bin, uniform read noise
// of 20 counts, no per-capture gain draw.
inline DegradationParams stress_params(const InstrumentProfile& profile) {
  SyntheticInstrumentOptions o;
  o.read_noise = 20.0;
  o.read_noise_stripe = 0.0;
  o.e = 0.0;
  return synthetic_instrument(profile, o).params;
}

inline constexpr double kStressRate = 1e3;

inline SamplePair stress_pair(const DegradationParams& params, const TransformBasis& basis,
                              std::size_t height, std::uint64_t seed) {
  const Cube scene = synthetic_scene(params.profile, height, params.width(), seed);
  return synthesize_pair(scene, params, basis, {seed, 0}, kStressRate);
}

}  // namespace ihi::test
