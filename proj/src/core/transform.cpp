#include "ihi/transform.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "ihi/error.hpp"
#include "ihi/parallel.hpp"

namespace ihi {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using StridedConst = Eigen::Map<const RowMat, 0, Eigen::OuterStride<>>;
using Strided = Eigen::Map<RowMat, 0, Eigen::OuterStride<>>;

// H x C view of detector column w.
StridedConst column_view(const Cube& cube, std::size_t w) {
  return StridedConst(cube.values().data() + w * cube.channels(),
                      static_cast<Eigen::Index>(cube.height()),
                      static_cast<Eigen::Index>(cube.channels()),
                      Eigen::OuterStride<>(static_cast<Eigen::Index>(cube.width() * cube.channels())));
}

Strided column_view(Cube& cube, std::size_t w) {
  return Strided(cube.values().data() + w * cube.channels(), static_cast<Eigen::Index>(cube.height()),
                 static_cast<Eigen::Index>(cube.channels()),
                 Eigen::OuterStride<>(static_cast<Eigen::Index>(cube.width() * cube.channels())));
}

void check_spectrum(const Cube& spectrum, std::size_t width, std::size_t wavenumbers,
                    const char* what) {
  expect_axis(spectrum, AxisKind::wavenumber, wavenumbers, what);
  require(spectrum.width() == width, Errc::shape_mismatch,
          "cube width " + std::to_string(spectrum.width()) + " does not match " +
              std::to_string(width) + " detector columns",
          what);
}

}  // namespace

TransformBasis build_basis(const InstrumentProfile& profile) {
  const std::size_t L = profile.opd_samples();
  const std::size_t N = profile.wavenumbers();
  TransformBasis basis;
  basis.profile_id = profile.id;
  basis.cos_table.resize(static_cast<Eigen::Index>(L), static_cast<Eigen::Index>(N));
  basis.sin_table.resize(static_cast<Eigen::Index>(L), static_cast<Eigen::Index>(N));
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t j = 0; j < N; ++j) {
      // Reduce the cycle count first so large OPDs keep full precision.
      const double cycles = profile.nu_per_nm[j] * profile.opd_nm[i];
      const double phase = 2.0 * std::numbers::pi * (cycles - std::round(cycles));
      const auto r = static_cast<Eigen::Index>(i);
      const auto c = static_cast<Eigen::Index>(j);
      basis.cos_table(r, c) = std::cos(phase);
      basis.sin_table(r, c) = std::sin(phase);
    }
  return basis;
}

Eigen::MatrixXd column_matrix(const TransformBasis& basis, const ComplexMap2& A, std::size_t w) {
  require(static_cast<std::size_t>(A.cols()) == basis.wavenumbers(), Errc::shape_mismatch,
          "A has " + std::to_string(A.cols()) + " bins, basis has " +
              std::to_string(basis.wavenumbers()),
          "A");
  const auto row = A.row(static_cast<Eigen::Index>(w));
  return basis.cos_table * row.real().transpose().asDiagonal() -
         basis.sin_table * row.imag().transpose().asDiagonal();
}

Cube apply_interferogram_transform(const Cube& spectrum, const ComplexMap2& A,
                                   const TransformBasis& basis) {
  check_spectrum(spectrum, static_cast<std::size_t>(A.rows()), basis.wavenumbers(), "spectrum");
  require(A.allFinite(), Errc::non_finite, "contains NaN or Inf", "A");
  Cube out = spectrum.like(AxisKind::opd, basis.opd_samples());
  parallel_for(0, spectrum.width(), [&](std::size_t w) {
    const Eigen::MatrixXd mf = column_matrix(basis, A, w);
    column_view(out, w).noalias() = column_view(spectrum, w) * mf.transpose();
  });
  return out;
}

Cube apply_forward(const Cube& x, const DegradationParams& params, const TransformBasis& basis) {
  params.validate_shapes();
  Cube out = apply_interferogram_transform(x, params.A, basis);
  const std::size_t L = basis.opd_samples();
  for (std::size_t h = 0; h < out.height(); ++h)
    for (std::size_t w = 0; w < out.width(); ++w) {
      auto px = out.pixel(h, w);
      for (std::size_t i = 0; i < L; ++i)
        px[i] *= params.K(static_cast<Eigen::Index>(w), static_cast<Eigen::Index>(i)) *
                 params.M(static_cast<Eigen::Index>(w), static_cast<Eigen::Index>(i));
    }
  return out;
}

InverseOperator::InverseOperator(const DegradationParams& params, const TransformBasis& basis)
    : basis_(basis), A_(params.A) {
  params.validate_shapes();
  require(params.opd_samples() == basis.opd_samples() && params.wavenumbers() == basis.wavenumbers(),
          Errc::shape_mismatch, "parameters do not match the transform basis", "params");
  const std::size_t W = params.width();
  weights_.resize(W);
  for (std::size_t w = 0; w < W; ++w)
    weights_[w] = (params.K.row(static_cast<Eigen::Index>(w)).array() *
                   params.M.row(static_cast<Eigen::Index>(w)).array())
                      .matrix()
                      .transpose();
  once_ = std::make_unique<std::once_flag[]>(W);
  columns_.resize(W);
}

ColumnOperator InverseOperator::build_column(std::size_t w) const {
  ColumnOperator op;
  const auto row = A_.row(static_cast<Eigen::Index>(w));
  for (Eigen::Index j = 0; j < row.size(); ++j)
    if (std::abs(row(j)) != 0.0) op.active.push_back(static_cast<std::size_t>(j));

  auto rank_error = [&](double cond) {
    std::ostringstream msg;
    msg << "column " << w << " is rank deficient (condition number " << cond << ", "
        << op.active.size() << " active bins)";
    fail(Errc::rank_deficient, msg.str(), "column " + std::to_string(w));
  };
  if (op.active.empty()) rank_error(INFINITY);

  const Eigen::MatrixXd full = weights_[w].asDiagonal() * column_matrix(basis_, A_, w);
  Eigen::MatrixXd g(full.rows(), static_cast<Eigen::Index>(op.active.size()));
  for (std::size_t k = 0; k < op.active.size(); ++k)
    g.col(static_cast<Eigen::Index>(k)) = full.col(static_cast<Eigen::Index>(op.active[k]));

  Eigen::BDCSVD<Eigen::MatrixXd> svd(g, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  op.max_singular = s.size() > 0 ? s(0) : 0.0;
  op.min_singular = s.size() > 0 ? s(s.size() - 1) : 0.0;
  if (!(op.max_singular > 0.0) || op.min_singular <= kSingularCutoff * op.max_singular)
    rank_error(op.condition());

  op.pinv = svd.matrixV() * s.cwiseInverse().asDiagonal() * svd.matrixU().transpose();
  return op;
}

const ColumnOperator& InverseOperator::column(std::size_t w) const {
  require(w < width(), Errc::shape_mismatch, "column index out of range", "column");
  std::call_once(once_[w], [&] { columns_[w].emplace(build_column(w)); });
  return *columns_[w];
}

void InverseOperator::build_all() const {
  parallel_for(0, width(), [&](std::size_t w) { column(w); });
}

std::shared_ptr<const InverseOperator> build_inverse(const DegradationParams& params,
                                                     const TransformBasis& basis) {
  return std::make_shared<const InverseOperator>(params, basis);
}

Cube apply_inverse(const Cube& y, const InverseOperator* inverse) {
  require(inverse != nullptr, Errc::cache_missing, "inverse operator has not been built",
          "inverse");
  expect_axis(y, AxisKind::opd, inverse->opd_samples(), "y");
  require(y.width() == inverse->width(), Errc::shape_mismatch,
          "width does not match the inverse operator", "y");
  Cube out = y.like(AxisKind::wavenumber, inverse->wavenumbers());
  parallel_for(0, y.width(), [&](std::size_t w) {
    const ColumnOperator& op = inverse->column(w);
    const Eigen::MatrixXd xs = column_view(y, w) * op.pinv.transpose();
    auto dst = column_view(out, w);
    for (std::size_t k = 0; k < op.active.size(); ++k)
      dst.col(static_cast<Eigen::Index>(op.active[k])) = xs.col(static_cast<Eigen::Index>(k));
  });
  return out;
}

}  // namespace ihi
