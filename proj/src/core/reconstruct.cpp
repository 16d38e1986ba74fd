#include "ihi/reconstruct.hpp"

#include <cmath>

#include "ihi/error.hpp"
#include "ihi/parallel.hpp"
#include "ihi/resample.hpp"
#include "ihi/stats.hpp"

namespace ihi {

namespace {

void check_measurement(const Cube& y, const ReconstructContext& ctx) {
  expect_axis(y, AxisKind::opd, ctx.params.opd_samples(), "y");
  require(y.width() == ctx.params.width(), Errc::shape_mismatch,
          "width does not match the parameter maps", "y");
  expect_finite(y, "y");
}

double l2_norm(const Cube& c) {
  double s = 0.0;
  for (double v : c.values()) s += v * v;
  return std::sqrt(s);
}

Cube difference(const Cube& a, const Cube& b) {
  Cube out = a;
  auto o = out.values();
  const auto bv = b.values();
  for (std::size_t k = 0; k < o.size(); ++k) o[k] -= bv[k];
  return out;
}

}  // namespace

const char* background_name(BackgroundMode mode) {
  switch (mode) {
    case BackgroundMode::none: return "none";
    case BackgroundMode::dark_only: return "dark";
    case BackgroundMode::dark_background: return "dark+background";
  }
  return "?";
}

BackgroundMode parse_background(const std::string& name) {
  if (name == "none") return BackgroundMode::none;
  if (name == "dark" || name == "dark-only") return BackgroundMode::dark_only;
  if (name == "dark+background" || name == "full") return BackgroundMode::dark_background;
  fail(Errc::invalid_argument, "unknown background mode '" + name + "'", "background");
}

ReconstructContext make_context(DegradationParams params) {
  params.validate();
  ReconstructContext ctx;
  ctx.basis = build_basis(params.profile);
  ctx.params = std::move(params);
  ctx.inverse = build_inverse(ctx.params, ctx.basis);
  return ctx;
}

Cube precorrect(const Cube& y, const ReconstructContext& ctx, BackgroundMode mode) {
  check_measurement(y, ctx);
  if (mode == BackgroundMode::none) return y;
  const DegradationParams& p = ctx.params;
  const std::size_t W = y.width(), L = y.channels();
  Cube out = y;
  parallel_for(0, y.height(), [&](std::size_t h) {
    for (std::size_t w = 0; w < W; ++w) {
      auto px = out.pixel(h, w);
      for (std::size_t i = 0; i < L; ++i)
        px[i] -= p.D(static_cast<Eigen::Index>(w), static_cast<Eigen::Index>(i));
    }
  });
  if (mode == BackgroundMode::dark_only) return out;

  // First pass: F′y′ = B + μ g with g = F′(K ⊙ M ⊙ β), so the spectral mean
  // gives μ = mean(F′y′) / (1 + mean(g)).
  const auto N = static_cast<double>(p.wavenumbers());
  std::vector<Eigen::VectorXd> bg(W);
  std::vector<double> gain(W);
  for (std::size_t w = 0; w < W; ++w) {
    const auto wi = static_cast<Eigen::Index>(w);
    bg[w] = (p.K.row(wi).array() * p.M.row(wi).array() * p.beta.row(wi).array()).matrix().transpose();
    const ColumnOperator& op = ctx.inverse->column(w);
    gain[w] = 1.0 + (op.pinv * bg[w]).sum() / N;
  }
  const Cube first = apply_inverse(out, ctx.inverse.get());
  const Map2 mean = spectral_mean(first);
  parallel_for(0, y.height(), [&](std::size_t h) {
    for (std::size_t w = 0; w < W; ++w) {
      const double mu = mean(static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(w)) / gain[w];
      auto px = out.pixel(h, w);
      for (std::size_t i = 0; i < L; ++i) px[i] -= mu * bg[w](static_cast<Eigen::Index>(i));
    }
  });
  return out;
}

Cube direct_spectrum(const Cube& y, const ReconstructContext& ctx) {
  return apply_inverse(precorrect(y, ctx, BackgroundMode::dark_background), ctx.inverse.get());
}

Cube reconstruct_direct(const Cube& y, const ReconstructContext& ctx) {
  return resample_wavenumber_to_hsi(direct_spectrum(y, ctx), ctx.params.profile);
}

std::vector<double> apodization_window(std::size_t samples, std::size_t center) {
  require(center < samples, Errc::invalid_argument, "center outside the OPD axis", "center");
  const double reach = static_cast<double>(std::max(center, samples - 1 - center)) + 1.0;
  std::vector<double> out(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    const double d = std::abs(static_cast<double>(i) - static_cast<double>(center));
    out[i] = 1.0 - d / reach;
  }
  return out;
}

Cube reconstruct_traditional(const Cube& y, const ReconstructContext& ctx) {
  check_measurement(y, ctx);
  const DegradationParams& p = ctx.params;
  const InstrumentProfile& profile = p.profile;
  const std::size_t W = y.width(), L = y.channels(), N = p.wavenumbers();
  const std::vector<double> window = apodization_window(L, profile.center_index);
  const Eigen::MatrixXd pinv = ctx.basis.cos_table.completeOrthogonalDecomposition().pseudoInverse();
  const std::vector<bool> band = profile.band_mask();

  Cube spectrum = y.like(AxisKind::wavenumber, N);
  parallel_for(0, y.height(), [&](std::size_t h) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(L));
    for (std::size_t w = 0; w < W; ++w) {
      const auto wi = static_cast<Eigen::Index>(w);
      const auto in = y.pixel(h, w);
      for (std::size_t i = 0; i < L; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        v(ii) = window[i] * (in[i] - p.D(wi, ii)) / (p.K(wi, ii) * p.M(wi, ii));
      }
      const Eigen::VectorXd s = pinv * v;
      auto dst = spectrum.pixel(h, w);
      for (std::size_t j = 0; j < N; ++j) {
        const double mag = std::abs(p.A(wi, static_cast<Eigen::Index>(j)));
        dst[j] = band[j] && mag > 0.0 ? s(static_cast<Eigen::Index>(j)) / mag : 0.0;
      }
    }
  });
  return resample_wavenumber_to_hsi(spectrum, profile);
}

StepWeights StepWeights::from_json(const nlohmann::json& j) {
  StepWeights a;
  if (j.is_number()) {
    a.scalar = j.get<double>();
    return a;
  }
  require(j.is_array() && !j.empty(), Errc::invalid_argument,
          "expected a number, a per-column array or a per-(column, OPD) array", "alpha");
  if (j.front().is_number()) {
    a.kind = Kind::column;
    a.values.resize(static_cast<Eigen::Index>(j.size()), 1);
    for (std::size_t w = 0; w < j.size(); ++w) a.values(static_cast<Eigen::Index>(w), 0) = j[w].get<double>();
    return a;
  }
  a.kind = Kind::map;
  const std::size_t cols = j.front().size();
  a.values.resize(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t w = 0; w < j.size(); ++w) {
    require(j[w].is_array() && j[w].size() == cols, Errc::shape_mismatch, "ragged alpha map",
            "alpha");
    for (std::size_t i = 0; i < cols; ++i)
      a.values(static_cast<Eigen::Index>(w), static_cast<Eigen::Index>(i)) = j[w][i].get<double>();
  }
  return a;
}

nlohmann::json StepWeights::to_json() const {
  if (kind == Kind::scalar) return scalar;
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index w = 0; w < values.rows(); ++w) {
    if (kind == Kind::column) {
      out.push_back(values(w, 0));
      continue;
    }
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index i = 0; i < values.cols(); ++i) row.push_back(values(w, i));
    out.push_back(row);
  }
  return out;
}

void StepWeights::validate(std::size_t width, std::size_t opd_samples) const {
  if (kind == Kind::scalar) {
    require(std::isfinite(scalar) && scalar >= 0.0, Errc::invalid_argument,
            "must be finite and >= 0", "alpha");
    return;
  }
  require(values.allFinite() && (values.array() >= 0.0).all(), Errc::invalid_argument,
          "must be finite and >= 0", "alpha");
  require(static_cast<std::size_t>(values.rows()) == width, Errc::shape_mismatch,
          "alpha needs one row per detector column", "alpha");
  if (kind == Kind::map)
    require(static_cast<std::size_t>(values.cols()) == opd_samples, Errc::shape_mismatch,
            "alpha map needs one entry per OPD sample", "alpha");
}

double StepWeights::at(std::size_t w, std::size_t i) const {
  switch (kind) {
    case Kind::scalar: return scalar;
    case Kind::column: return values(static_cast<Eigen::Index>(w), 0);
    case Kind::map: return values(static_cast<Eigen::Index>(w), static_cast<Eigen::Index>(i));
  }
  return scalar;
}

void UnfoldConfig::validate() const {
  require(stages >= 1, Errc::invalid_argument, "must be >= 1", "stages");
  if (alpha.kind == StepWeights::Kind::scalar) alpha.validate(0, 0);
}

nlohmann::json UnfoldConfig::to_json() const {
  return {{"stages", stages},
          {"alpha", alpha.to_json()},
          {"prior", prior},
          {"background", background_name(background)},
          {"momentum", momentum}};
}

UnfoldResult unfold(const Cube& y, const ReconstructContext& ctx, const UnfoldConfig& config) {
  std::unique_ptr<Prior> prior = make_prior(config.prior);
  return unfold(y, ctx, config, *prior);
}

UnfoldResult unfold(const Cube& y, const ReconstructContext& ctx, const UnfoldConfig& config,
                    Prior& prior) {
  config.validate();
  config.alpha.validate(ctx.params.width(), ctx.params.opd_samples());
  const Cube yp = precorrect(y, ctx, config.background);
  const InverseOperator* inv = ctx.inverse.get();

  UnfoldResult result;
  Cube x = apply_inverse(yp, inv);
  Cube previous = x;
  result.trace.push_back(l2_norm(difference(yp, apply_forward(x, ctx.params, ctx.basis))));

  for (std::size_t k = 0; k < config.stages; ++k) {
    Cube residual = difference(yp, apply_forward(x, ctx.params, ctx.basis));
    if (!(config.alpha.kind == StepWeights::Kind::scalar && config.alpha.scalar == 1.0)) {
      for (std::size_t h = 0; h < residual.height(); ++h)
        for (std::size_t w = 0; w < residual.width(); ++w) {
          auto px = residual.pixel(h, w);
          for (std::size_t i = 0; i < px.size(); ++i) px[i] *= config.alpha.at(w, i);
        }
    }
    Cube z = apply_inverse(residual, inv);
    {
      auto zv = z.values();
      const auto xv = x.values();
      const auto pv = previous.values();
      for (std::size_t n = 0; n < zv.size(); ++n)
        zv[n] += xv[n] + (config.momentum ? xv[n] - pv[n] : 0.0);
    }

    Cube next;
    const std::string where = "stage " + std::to_string(k);
    try {
      next = prior.denoise(z, k);
    } catch (const Error& e) {
      if (e.field() == where) throw;
      fail(e.code() == Errc::invalid_argument ? Errc::prior_failure : e.code(), e.what(), where);
    } catch (const std::exception& e) {
      fail(Errc::prior_failure, e.what(), where);
    }
    if (!next.same_shape(z) || next.axis() != z.axis())
      fail(Errc::prior_failure, "prior '" + prior.id() + "' changed the cube shape", where);
    if (!next.all_finite())
      fail(Errc::prior_failure, "prior '" + prior.id() + "' produced non-finite values", where);

    previous = std::move(x);
    x = std::move(next);
    result.trace.push_back(l2_norm(difference(yp, apply_forward(x, ctx.params, ctx.basis))));
    if (!std::isfinite(result.trace.back()))
      fail(Errc::numerical, "data-fidelity term is not finite", where);
  }

  result.hsi = resample_wavenumber_to_hsi(x, ctx.params.profile);
  result.spectrum = std::move(x);
  return result;
}

}  // namespace ihi
