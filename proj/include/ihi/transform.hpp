#pragma once

#include <cmath>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "ihi/cube.hpp"
#include "ihi/params.hpp"
#include "ihi/profile.hpp"

namespace ihi {

/// Discrete spectral-to-OPD transform tables, L x N:
///   cos_table(i, j) = cos(2π ν_j l_i),  sin_table(i, j) = sin(2π ν_j l_i).
/// The interferogram of a complex-weighted spectrum s is
///   I(l_i) = Σ_j Re(s_j) cos_table(i, j) - Im(s_j) sin_table(i, j),
/// i.e. the real part of Σ_j s_j exp(i 2π ν_j l_i), unnormalized.
struct TransformBasis {
  Eigen::MatrixXd cos_table;
  Eigen::MatrixXd sin_table;
  std::string profile_id;

  std::size_t opd_samples() const { return static_cast<std::size_t>(cos_table.rows()); }
  std::size_t wavenumbers() const { return static_cast<std::size_t>(cos_table.cols()); }
};

TransformBasis build_basis(const InstrumentProfile& profile);

/// M_F = C diag(Re A_w) - S diag(Im A_w), L x N.
Eigen::MatrixXd column_matrix(const TransformBasis& basis, const ComplexMap2& A, std::size_t w);

/// I₁[h, w, :] = M_F(w) · spectrum[h, w, :]
Cube apply_interferogram_transform(const Cube& spectrum, const ComplexMap2& A,
                                   const TransformBasis& basis);

/// y = K ⊙ M ⊙ I₁; background, dark and noise terms are not part of F.
Cube apply_forward(const Cube& x, const DegradationParams& params, const TransformBasis& basis);

inline constexpr double kSingularCutoff = 1e-10;

/// Left inverse of one detector column, restricted to the wavenumber bins
/// where A is nonzero (`active`); the remaining bins reconstruct to zero.
struct ColumnOperator {
  std::vector<std::size_t> active;
  Eigen::MatrixXd pinv;  // |active| x L
  double min_singular = 0.0;
  double max_singular = 0.0;

  double condition() const { return min_singular > 0 ? max_singular / min_singular : INFINITY; }
};

/// Lazily built, memoized per-column pseudo-inverses of diag(K⊙M)·M_F.
/// Concurrent requests for distinct columns are safe; each column is built
/// once.
class InverseOperator {
 public:
  InverseOperator(const DegradationParams& params, const TransformBasis& basis);

  std::size_t width() const { return weights_.size(); }
  std::size_t opd_samples() const { return basis_.opd_samples(); }
  std::size_t wavenumbers() const { return basis_.wavenumbers(); }

  /// Throws Errc::rank_deficient naming the column and its condition number.
  const ColumnOperator& column(std::size_t w) const;
  void build_all() const;

 private:
  ColumnOperator build_column(std::size_t w) const;

  TransformBasis basis_;
  ComplexMap2 A_;
  std::vector<Eigen::VectorXd> weights_;  // K ⊙ M per column
  mutable std::unique_ptr<std::once_flag[]> once_;
  mutable std::vector<std::optional<ColumnOperator>> columns_;
};

std::shared_ptr<const InverseOperator> build_inverse(const DegradationParams& params,
                                                     const TransformBasis& basis);

/// x̂[h, w, active] = pinv(w) · y[h, w, :]
Cube apply_inverse(const Cube& y, const InverseOperator* inverse);

}  // namespace ihi
