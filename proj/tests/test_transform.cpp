#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ihi/error.hpp"
#include "ihi/instrument.hpp"
#include "ihi/transform.hpp"
#include "support.hpp"

using namespace ihi;

namespace {

ComplexMap2 random_A(std::size_t W, std::size_t N, std::uint64_t seed) {
  ComplexMap2 A(W, N);
  for (std::size_t w = 0; w < W; ++w)
    for (std::size_t j = 0; j < N; ++j) {
      CounterRng r({seed, 1}, w * N + j);
      A(w, j) = {0.5 + r.uniform(), r.uniform() - 0.5};
    }
  return A;
}

// Direct summation over (i, j) with complex arithmetic.
Cube naive_interferogram(const Cube& b, const ComplexMap2& A, const InstrumentProfile& p) {
  Cube out = b.like(AxisKind::opd, p.opd_samples());
  for (std::size_t h = 0; h < b.height(); ++h)
    for (std::size_t w = 0; w < b.width(); ++w)
      for (std::size_t i = 0; i < p.opd_samples(); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < p.wavenumbers(); ++j) {
          const std::complex<double> phase =
              std::exp(std::complex<double>(0.0, 2.0 * std::numbers::pi * p.nu_per_nm[j] * p.opd_nm[i]));
          acc += (A(w, j) * b(h, w, j) * phase).real();
        }
        out(h, w, i) = acc;
      }
  return out;
}

}  // namespace

TEST_CASE("basis tables") {
  const InstrumentProfile p = desk_profile();
  const TransformBasis t = build_basis(p);
  CHECK(t.opd_samples() == 64);
  CHECK(t.wavenumbers() == 55);
  for (std::size_t j = 0; j < 55; ++j) {
    CHECK(t.cos_table(9, j) == 1.0);
    CHECK(t.sin_table(9, j) == 0.0);
  }
  for (std::size_t i = 0; i < 64; ++i) {
    CHECK(t.cos_table(i, 0) == 1.0);
    CHECK(t.sin_table(i, 0) == 0.0);
  }
}

TEST_CASE("quarter cycle gives cos 0 and sin 1") {
  ProfileSpec s;
  s.id = "quarter";
  s.height = 1;
  s.width = 1;
  s.opd_samples = 5;
  s.center_index = 0;
  s.bands = 3;
  s.nu_max_per_nm = 1.0;
  s.opd_step_nm = 0.5;
  const InstrumentProfile p = make_profile(s);
  const TransformBasis t = build_basis(p);
  REQUIRE(p.nu_per_nm[2] * p.opd_nm[1] == 0.25);
  CHECK(std::abs(t.cos_table(1, 2)) < 1e-15);
  CHECK(t.sin_table(1, 2) == 1.0);
}

TEST_CASE("zero spectrum and single spike") {
  const InstrumentProfile p = desk_profile();
  const TransformBasis t = build_basis(p);
  const ComplexMap2 ones = ComplexMap2::Constant(p.width, p.wavenumbers(), {1.0, 0.0});
  const Cube zero(2, p.width, p.wavenumbers(), AxisKind::wavenumber, p.id, ScalarType::f64);
  CHECK(test::all_equal(apply_interferogram_transform(zero, ones, t), 0.0));

  const std::size_t js = 23;
  Cube spike(1, p.width, p.wavenumbers(), AxisKind::wavenumber, p.id, ScalarType::f64);
  for (std::size_t w = 0; w < p.width; ++w) spike(0, w, js) = 1.0;
  const Cube y = apply_interferogram_transform(spike, ones, t);
  for (std::size_t i = 0; i < p.opd_samples(); ++i)
    CHECK(y(0, 5, i) ==
          doctest::Approx(std::cos(2.0 * std::numbers::pi * p.nu_per_nm[js] * p.opd_nm[i])).epsilon(1e-12));
}

TEST_CASE("matrix form matches naive summation") {
  const InstrumentProfile p = desk_profile();
  const TransformBasis t = build_basis(p);
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const ComplexMap2 A = random_A(p.width, p.wavenumbers(), seed);
    const Cube b = test::random_cube(2, p.width, p.wavenumbers(), AxisKind::wavenumber, p.id, seed);
    CHECK(test::relative_l2(apply_interferogram_transform(b, A, t), naive_interferogram(b, A, p)) <=
          1e-10);
  }
}

TEST_CASE("forward operator") {
  const InstrumentProfile p = desk_profile();
  const TransformBasis t = build_basis(p);
  DegradationParams params = identity_params(p);
  const Cube x = test::random_cube(2, p.width, p.wavenumbers(), AxisKind::wavenumber, p.id, 5);
  CHECK(test::max_abs_diff(apply_forward(x, params, t), apply_interferogram_transform(x, params.A, t)) ==
        0.0);
  const Cube zero(2, p.width, p.wavenumbers(), AxisKind::wavenumber, p.id, ScalarType::f64);
  CHECK(test::all_equal(apply_forward(zero, params, t), 0.0));
  const Cube y1 = apply_forward(x, params, t);
  params.K *= 2.0;
  const Cube y2 = apply_forward(x, params, t);
  for (std::size_t k = 0; k < y1.size(); ++k) CHECK(y2.values()[k] == 2.0 * y1.values()[k]);
}

TEST_CASE("pseudo-inverse of the ideal operator") {
  const InstrumentProfile p = desk_profile();
  const TransformBasis t = build_basis(p);
  const DegradationParams params = identity_params(p);
  const InverseOperator inv(params, t);
  const ColumnOperator& col = inv.column(0);
  CHECK(col.active.size() == 55);
  const Eigen::MatrixXd mf = column_matrix(t, params.A, 0);
  const Eigen::MatrixXd prod = col.pinv * mf;
  const double dev = (prod - Eigen::MatrixXd::Identity(55, 55)).cwiseAbs().maxCoeff();
  CHECK(dev <= 1e-8);
}

TEST_CASE("zero-weight OPD sample keeps full rank") {
  const InstrumentProfile p = desk_profile();
  const TransformBasis t = build_basis(p);
  DegradationParams params = identity_params(p);
  params.K(3, 3) = 0.0;  // mirrored by OPD sample 2c - 3
  const InverseOperator inv(params, t);
  const ColumnOperator& col = inv.column(3);
  CHECK(col.active.size() == 55);
  CHECK(col.pinv.col(3).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("zero response column is rank deficient") {
  const InstrumentProfile p = desk_profile();
  const TransformBasis t = build_basis(p);
  DegradationParams params = identity_params(p);
  params.A.row(4).setZero();
  const InverseOperator inv(params, t);
  try {
    inv.column(4);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::rank_deficient);
  }
}

TEST_CASE("inverse of forward is identity") {
  const InstrumentProfile p = desk_profile();
  const TransformBasis t = build_basis(p);
  const SyntheticInstrument inst = synthetic_instrument(p);
  const auto inv = build_inverse(inst.params, t);
  const Cube x = test::random_cube(2, p.width, p.wavenumbers(), AxisKind::wavenumber, p.id, 8);
  CHECK(test::relative_l2(apply_inverse(apply_forward(x, inst.params, t), inv.get()), x) <= 1e-5);
  const Cube zero(1, p.width, p.opd_samples(), AxisKind::opd, p.id, ScalarType::f64);
  CHECK(test::all_equal(apply_inverse(zero, inv.get()), 0.0));
}

TEST_CASE("reconstruction error grows linearly with noise") {
  const InstrumentProfile p = desk_profile();
  const TransformBasis t = build_basis(p);
  const SyntheticInstrument inst = synthetic_instrument(p);
  const auto inv = build_inverse(inst.params, t);
  const Cube x = test::random_cube(4, p.width, p.wavenumbers(), AxisKind::wavenumber, p.id, 2);
  const Cube y = apply_forward(x, inst.params, t);
  auto error_at = [&](double sigma) {
    Cube noisy = y;
    auto v = noisy.values();
    for (std::size_t k = 0; k < v.size(); ++k) {
      CounterRng r({77, 0}, k);
      v[k] += sigma * r.normal();
    }
    const Cube xh = apply_inverse(noisy, inv.get());
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) s += std::pow(xh.values()[k] - x.values()[k], 2);
    return std::sqrt(s);
  };
  // Same noise realization: error scales exactly with sigma.
  const double e1 = error_at(0.01), e2 = error_at(0.02);
  CHECK(e2 / e1 == doctest::Approx(2.0).epsilon(0.01));
}

TEST_CASE("shape checks") {
  const InstrumentProfile p = desk_profile();
  const TransformBasis t = build_basis(p);
  const ComplexMap2 A = ComplexMap2::Constant(p.width, p.wavenumbers() - 1, {1.0, 0.0});
  const Cube x(1, p.width, p.wavenumbers(), AxisKind::wavenumber, p.id);
  CHECK_THROWS_AS(apply_interferogram_transform(x, A, t), Error);
}
