#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace ihi {

/// Philox4x32-10 block function: one 128-bit output per (counter, key).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

std::uint64_t splitmix64(std::uint64_t x);

/// Seed and stream id. Every element of a simulation draws from its own
/// counter sequence keyed by (seed, stream, element), so samples depend only
/// on those three values.
struct RngHandle {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

/// Reserved element id for per-scene draws (e.g. the electronic gain).
inline constexpr std::uint64_t kSceneElement = ~std::uint64_t{0};

class CounterRng {
 public:
  CounterRng(RngHandle handle, std::uint64_t element);

  std::uint32_t next_u32();
  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  /// Exact inversion below rate 50; rounded Normal(rate, sqrt(rate)) above.
  double poisson(double rate);

 private:
  std::array<std::uint32_t, 2> key_{};
  std::uint64_t element_ = 0;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  unsigned used_ = 4;
};

inline constexpr double kPoissonNormalThreshold = 50.0;

/// Stable 64-bit seed for (master, label, index), independent of call order.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label, std::uint64_t index);

}  // namespace ihi
