#include <doctest.h>

#include <cmath>
#include <set>

#include "ihi/rng.hpp"

using namespace ihi;

TEST_CASE("philox4x32-10 known answers") {
  const auto zero = philox4x32({0, 0, 0, 0}, {0, 0});
  CHECK(zero[0] == 0x6627e8d5u);
  CHECK(zero[1] == 0xe169c58du);
  CHECK(zero[2] == 0xbc57ac4cu);
  CHECK(zero[3] == 0x9b00dbd8u);
  const auto pi = philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                             {0xa4093822u, 0x299f31d0u});
  CHECK(pi[0] == 0xd16cfe09u);
  CHECK(pi[1] == 0x94fdccebu);
  CHECK(pi[2] == 0x5001e420u);
  CHECK(pi[3] == 0x24126ea1u);
}

TEST_CASE("counter streams are reproducible and distinct") {
  CounterRng a({5, 1}, 42), b({5, 1}, 42), c({5, 2}, 42), d({5, 1}, 43);
  const double va = a.uniform();
  CHECK(va == b.uniform());
  CHECK(va != c.uniform());
  CHECK(va != d.uniform());
}

TEST_CASE("uniform range and moments") {
  double sum = 0.0;
  const int n = 100000;
  for (int k = 0; k < n; ++k) {
    CounterRng r({9, 0}, static_cast<std::uint64_t>(k));
    const double u = r.uniform();
    CHECK_FALSE((u < 0.0 || u >= 1.0));
    sum += u;
  }
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("normal moments") {
  double s1 = 0.0, s2 = 0.0;
  const int n = 100000;
  for (int k = 0; k < n; ++k) {
    CounterRng r({3, 0}, static_cast<std::uint64_t>(k));
    const double z = r.normal();
    s1 += z;
    s2 += z * z;
  }
  CHECK(std::abs(s1 / n) < 0.02);
  CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("Poisson moments in both regimes") {
  for (double rate : {3.0, 20.0, 1000.0}) {
    double s1 = 0.0, s2 = 0.0;
    const int n = 100000;
    for (int k = 0; k < n; ++k) {
      CounterRng r({4, 0}, static_cast<std::uint64_t>(k));
      const double x = r.poisson(rate);
      CHECK(x >= 0.0);
      CHECK(x == std::floor(x));
      s1 += x;
      s2 += x * x;
    }
    const double mean = s1 / n;
    const double var = s2 / n - mean * mean;
    CHECK(mean == doctest::Approx(rate).epsilon(0.02));
    CHECK(var / mean == doctest::Approx(1.0).epsilon(0.03));
  }
  CounterRng r({1, 0}, 0);
  CHECK(r.poisson(0.0) == 0.0);
}

TEST_CASE("derived seeds") {
  CHECK(derive_seed(1, "scene", 0) == derive_seed(1, "scene", 0));
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 100; ++i) seen.insert(derive_seed(1, "scene", i));
  seen.insert(derive_seed(2, "scene", 0));
  seen.insert(derive_seed(1, "other", 0));
  CHECK(seen.size() == 102);
}
