#include "ihi/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>

#include "ihi/degrade.hpp"
#include "ihi/error.hpp"
#include "ihi/io.hpp"
#include "ihi/parallel.hpp"
#include "ihi/stats.hpp"

namespace ihi {

namespace fs = std::filesystem;

namespace {

constexpr double kGuard = 1e-6;
constexpr int kBackgroundTerms = 3;  // 1, s, s² along the OPD axis
constexpr double kSmoothWeight = 0.1;  // second-difference penalty on A across bins

// Design matrix [C_band | -S_band | 1 s s²] shared by the fringe and the
// spectrum fits.
struct FringeModel {
  std::vector<std::size_t> bins;
  Eigen::MatrixXd design;
  Eigen::MatrixXd solve;  // least-squares solution operator

  Eigen::Index band_size() const { return static_cast<Eigen::Index>(bins.size()); }
};

FringeModel fringe_model(const TransformBasis& basis, const std::vector<bool>& band) {
  FringeModel m;
  for (std::size_t j = 0; j < band.size(); ++j)
    if (band[j]) m.bins.push_back(j);
  const auto L = static_cast<Eigen::Index>(basis.opd_samples());
  const Eigen::Index nb = m.band_size();
  const Eigen::Index unknowns = 2 * nb + kBackgroundTerms;
  require(nb > 0, Errc::ill_posed, "reference spectra have no in-band support", "reference");
  if (unknowns > L)
    fail(Errc::ill_posed,
         "fit needs " + std::to_string(unknowns) + " unknowns but only " + std::to_string(L) +
             " OPD samples; truncate the band to at most " +
             std::to_string((L - kBackgroundTerms) / 2) + " bins",
         "band");

  m.design.resize(L, unknowns);
  for (Eigen::Index k = 0; k < nb; ++k) {
    const auto j = static_cast<Eigen::Index>(m.bins[static_cast<std::size_t>(k)]);
    m.design.col(k) = basis.cos_table.col(j);
    m.design.col(nb + k) = -basis.sin_table.col(j);
  }
  for (Eigen::Index i = 0; i < L; ++i) {
    const double s = static_cast<double>(i) / static_cast<double>(L - 1) - 0.5;
    m.design(i, 2 * nb) = 1.0;
    m.design(i, 2 * nb + 1) = s;
    m.design(i, 2 * nb + 2) = s * s;
  }
  // Minimum-norm pseudo-inverse of the design.
  m.solve = Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(m.design).pseudoInverse();
  return m;
}

// Per-level spectrum fit with A as the unknown. Columns are the in-band
// fringes scaled by the reference, plus the background polynomial, with a
// second-difference penalty on Re A and Im A across bins.
struct SpectrumFit {
  Eigen::MatrixXd fringes;  // L x 2nb, in counts per unit A
  Eigen::MatrixXd solve;    // (2nb + 3) x L
  double scale = 1.0;
};

SpectrumFit spectrum_fit(const FringeModel& model, const std::vector<double>& ref) {
  const Eigen::Index nb = model.band_size();
  const Eigen::Index unknowns = 2 * nb + kBackgroundTerms;
  SpectrumFit f;
  f.scale = *std::max_element(ref.begin(), ref.end());
  Eigen::MatrixXd g = model.design;
  for (Eigen::Index k = 0; k < nb; ++k) {
    const double b = ref[model.bins[static_cast<std::size_t>(k)]] / f.scale;
    g.col(k) *= b;
    g.col(nb + k) *= b;
  }
  f.fringes = g.leftCols(2 * nb) * f.scale;

  Eigen::MatrixXd penalty = Eigen::MatrixXd::Zero(unknowns, unknowns);
  if (nb >= 3) {
    Eigen::MatrixXd d2 = Eigen::MatrixXd::Zero(nb - 2, nb);
    for (Eigen::Index k = 0; k + 2 < nb; ++k) {
      d2(k, k) = 1.0;
      d2(k, k + 1) = -2.0;
      d2(k, k + 2) = 1.0;
    }
    const Eigen::MatrixXd block = d2.transpose() * d2;
    penalty.block(0, 0, nb, nb) = block;
    penalty.block(nb, nb, nb, nb) = block;
  }
  const Eigen::MatrixXd normal = g.transpose() * g + kSmoothWeight * penalty;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
  require(ldlt.info() == Eigen::Success && ldlt.isPositive(), Errc::ill_posed,
          "spectrum fit is singular", "band");
  f.solve = ldlt.solve(g.transpose()) / f.scale;
  return f;
}

// Symmetric moving average; the window shrinks near the ends so linear trends
// pass unchanged.
Eigen::VectorXd moving_average(const Eigen::VectorXd& v, Eigen::Index window) {
  const Eigen::Index n = v.size();
  const Eigen::Index half = window / 2;
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index r = std::min({half, i, n - 1 - i});
    out(i) = v.segment(i - r, 2 * r + 1).mean();
  }
  return out;
}

double cube_mean(const Cube& c) {
  const auto v = c.values();
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

void expect_capture(const Cube& c, const InstrumentProfile& profile, const std::string& what) {
  expect_axis(c, AxisKind::opd, profile.opd_samples(), what.c_str());
  require(c.width() == profile.width, Errc::shape_mismatch, "width does not match the profile",
          what);
  require(c.height() >= kMinCalibrationRows, Errc::degenerate_axis,
          "calibration captures need H >= 16", what);
}

}  // namespace

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  double m = values[mid];
  if (values.size() % 2 == 0) {
    const double lo = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
    m = 0.5 * (m + lo);
  }
  return m;
}

void CalibrationSet::validate(const InstrumentProfile& profile) const {
  expect_capture(dark, profile, "dark");
  require(relative.size() >= 2, Errc::invalid_argument, "need at least two relative levels",
          "relative");
  require(absolute.size() >= 1 && absolute.size() == reference.size(), Errc::invalid_argument,
          "need one reference spectrum per absolute capture", "reference");
  for (std::size_t i = 0; i < relative.size(); ++i)
    expect_capture(relative[i], profile, "relative_" + std::to_string(i));
  for (std::size_t i = 0; i < absolute.size(); ++i) {
    expect_capture(absolute[i], profile, "absolute_" + std::to_string(i));
    require(reference[i].size() == profile.wavenumbers(), Errc::shape_mismatch,
            "reference spectrum must have N entries", "reference_" + std::to_string(i));
  }
}

std::vector<double> reference_spectrum(const InstrumentProfile& profile, double level,
                                       std::size_t variant) {
  std::vector<double> out(profile.wavenumbers(), 0.0);
  const double lo = profile.band_nu_min();
  const double hi = profile.band_nu_max();
  const double v = static_cast<double>(variant);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t j = 0; j < out.size(); ++j) {
    const double nu = profile.nu_per_nm[j];
    if (!profile.in_band(nu)) continue;
    const double t = (nu - lo) / (hi - lo);
    out[j] = 1.0 + 0.25 * std::sin(std::numbers::pi * t * (1.0 + 0.5 * v) + 0.7 * v) + 0.2 * t;
    sum += out[j];
    ++count;
  }
  const double scale = count > 0 ? level * static_cast<double>(count) / sum : 0.0;
  for (double& x : out) x *= scale;
  return out;
}

CalibrationSet simulate_calibration(const SyntheticInstrument& truth, const TransformBasis& basis,
                                    const CalibrationCaptureOptions& options) {
  const DegradationParams& p = truth.params;
  const InstrumentProfile& profile = p.profile;
  const std::size_t H = options.height;
  const std::size_t W = profile.width;
  const std::size_t L = profile.opd_samples();
  const ElectronicState state = unit_electronic_state(p);
  CalibrationSet set;

  Cube zero(H, W, L, AxisKind::opd, profile.id);
  set.dark = electronic_degrade(zero, state, {options.seed, 0});

  for (std::size_t i = 0; i < options.relative_rates.size(); ++i) {
    Cube optical(H, W, L, AxisKind::opd, profile.id);
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t w = 0; w < W; ++w) {
        auto px = optical.pixel(h, w);
        for (std::size_t l = 0; l < L; ++l)
          px[l] = options.relative_rates[i] *
                  truth.relative_response(static_cast<Eigen::Index>(w), static_cast<Eigen::Index>(l));
      }
    set.relative.push_back(electronic_degrade(optical, state, {options.seed, 1 + i}));
  }

  for (std::size_t i = 0; i < options.absolute_levels.size(); ++i) {
    auto ref = reference_spectrum(profile, options.absolute_levels[i], i);
    Cube source(H, W, profile.wavenumbers(), AxisKind::wavenumber, profile.id);
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t w = 0; w < W; ++w) std::copy(ref.begin(), ref.end(), source.pixel(h, w).begin());
    const Cube optical = optical_degrade(source, p, basis);
    set.absolute.push_back(electronic_degrade(optical, state, {options.seed, 100 + i}));
    set.reference.push_back(std::move(ref));
  }
  return set;
}

void write_calibration_set(const CalibrationSet& set, const InstrumentProfile& profile,
                           const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(Errc::io, "cannot create directory: " + ec.message(), dir.string());
  write_cube(set.dark, profile, dir / "dark.ihic");
  for (std::size_t i = 0; i < set.relative.size(); ++i)
    write_cube(set.relative[i], profile, dir / ("relative_" + std::to_string(i) + ".ihic"));
  for (std::size_t i = 0; i < set.absolute.size(); ++i) {
    write_cube(set.absolute[i], profile, dir / ("absolute_" + std::to_string(i) + ".ihic"));
    write_vector(dir / ("reference_" + std::to_string(i) + ".ihic"), set.reference[i]);
  }
}

CalibrationSet read_calibration_set(const fs::path& dir, InstrumentProfile& profile) {
  if (!fs::is_directory(dir)) fail(Errc::io, "calibration directory not found", dir.string());
  CalibrationSet set;
  CubeFile dark = read_cube_file(dir / "dark.ihic");
  if (!dark.profile) fail(Errc::io, "dark capture has no sidecar profile", (dir / "dark.json").string());
  profile = *dark.profile;
  set.dark = std::move(dark.cube);
  for (std::size_t i = 0; fs::exists(dir / ("relative_" + std::to_string(i) + ".ihic")); ++i)
    set.relative.push_back(read_cube(dir / ("relative_" + std::to_string(i) + ".ihic")));
  for (std::size_t i = 0; fs::exists(dir / ("absolute_" + std::to_string(i) + ".ihic")); ++i) {
    set.absolute.push_back(read_cube(dir / ("absolute_" + std::to_string(i) + ".ihic")));
    set.reference.push_back(read_vector(dir / ("reference_" + std::to_string(i) + ".ihic")));
  }
  set.validate(profile);
  return set;
}

DarkEstimate estimate_dark(const Cube& dark_capture) {
  require(dark_capture.height() >= kMinCalibrationRows, Errc::degenerate_axis,
          "dark capture needs H >= 16", "H");
  ColumnStats s = column_stats(dark_capture);
  return {std::move(s.mean), std::move(s.stddev)};
}

double GainEstimate::invalid_fraction() const {
  return valid.empty() ? 0.0 : static_cast<double>(invalid_count) / static_cast<double>(valid.size());
}

GainEstimate estimate_gain(std::span<const Cube> relative, const Map2& dark, const Map2& read_noise) {
  require(!relative.empty(), Errc::invalid_argument, "no relative captures", "relative");
  const Eigen::Index W = dark.rows();
  const Eigen::Index L = dark.cols();
  Map2 sum = Map2::Zero(W, L);
  Eigen::MatrixXi count = Eigen::MatrixXi::Zero(W, L);
  for (const Cube& capture : relative) {
    require(capture.height() >= kMinCalibrationRows, Errc::degenerate_axis,
            "relative capture needs H >= 16", "H");
    const ColumnStats s = column_stats(capture);
    require(s.mean.rows() == W && s.mean.cols() == L, Errc::shape_mismatch,
            "capture does not match the dark map", "relative");
    for (Eigen::Index w = 0; w < W; ++w)
      for (Eigen::Index l = 0; l < L; ++l) {
        const double shot_mean = s.mean(w, l) - dark(w, l);
        const double shot_var = s.stddev(w, l) * s.stddev(w, l) - read_noise(w, l) * read_noise(w, l);
        if (!(shot_mean > 0.0)) continue;
        const double k = shot_var / shot_mean;
        if (!(k > 0.0) || !std::isfinite(k)) continue;
        sum(w, l) += k;
        count(w, l) += 1;
      }
  }

  GainEstimate out;
  out.raw = Map2::Zero(W, L);
  out.valid.assign(static_cast<std::size_t>(W * L), 0);
  std::vector<double> all_valid;
  for (Eigen::Index w = 0; w < W; ++w)
    for (Eigen::Index l = 0; l < L; ++l)
      if (count(w, l) > 0) {
        out.raw(w, l) = sum(w, l) / count(w, l);
        out.valid[static_cast<std::size_t>(w * L + l)] = 1;
        all_valid.push_back(out.raw(w, l));
      } else {
        ++out.invalid_count;
      }

  out.gain = out.raw;
  const double global = median(all_valid);
  for (Eigen::Index w = 0; w < W; ++w) {
    std::vector<double> col;
    for (Eigen::Index l = 0; l < L; ++l)
      if (out.valid[static_cast<std::size_t>(w * L + l)]) col.push_back(out.raw(w, l));
    const double fill = col.empty() ? global : median(col);
    if (fill <= 0.0) continue;
    for (Eigen::Index l = 0; l < L; ++l)
      if (!out.valid[static_cast<std::size_t>(w * L + l)]) {
        out.gain(w, l) = fill;
        ++out.imputed_count;
      }
  }
  return out;
}

void check_invalid_budget(double invalid_fraction, const std::string& stage) {
  if (invalid_fraction > kInvalidBudget)
    fail(Errc::budget_exceeded,
         std::to_string(invalid_fraction * 100.0) + "% of elements invalid (budget 10%)", stage);
}

std::vector<bool> reference_support(std::span<const std::vector<double>> reference) {
  require(!reference.empty(), Errc::invalid_argument, "no reference spectra", "reference");
  std::vector<bool> band(reference.front().size(), false);
  for (const auto& ref : reference) {
    require(ref.size() == band.size(), Errc::shape_mismatch, "reference lengths differ",
            "reference");
    const double peak = *std::max_element(ref.begin(), ref.end());
    for (std::size_t j = 0; j < ref.size(); ++j)
      if (peak > 0.0 && ref[j] > kGuard * peak) band[j] = true;
  }
  return band;
}

ResponseEstimate estimate_response(std::span<const Cube> relative, std::span<const Cube> absolute,
                                   const Map2& dark, const Map2& gain,
                                   const std::vector<bool>& fringe_bins,
                                   const TransformBasis& basis) {
  require(!relative.empty() && !absolute.empty(), Errc::invalid_argument,
          "need relative and absolute captures", "captures");
  const Eigen::Index W = dark.rows();
  const Eigen::Index L = dark.cols();
  require(gain.rows() == W && gain.cols() == L, Errc::shape_mismatch,
          "gain map does not match dark map", "K");
  ResponseEstimate out;

  // M_R: dark-removed, gain-removed flat fields, each normalized, averaged.
  out.relative = Map2::Zero(W, L);
  for (const Cube& capture : relative) {
    Map2 level = column_mean(capture) - dark;
    for (Eigen::Index w = 0; w < W; ++w)
      for (Eigen::Index l = 0; l < L; ++l) level(w, l) = gain(w, l) > 0 ? level(w, l) / gain(w, l) : 0.0;
    const double m = level.mean();
    require(m > 0.0, Errc::numerical, "relative capture has no signal above dark", "relative");
    out.relative += level / m;
  }
  out.relative /= static_cast<double>(relative.size());
  out.relative /= out.relative.mean();

  // M_A: low-pass envelope of the absolute captures after removing the
  // in-band fringe component.
  const FringeModel model = fringe_model(basis, fringe_bins);
  const Eigen::Index nb = model.band_size();
  const Eigen::Index window = (L + 7) / 8;
  const double floor_value = kGuard * out.relative.maxCoeff();
  out.scan = Map2::Zero(W, L);
  std::vector<std::size_t> guarded(static_cast<std::size_t>(W), 0);
  for (const Cube& capture : absolute) {
    const Map2 mean = column_mean(capture);
    parallel_for(0, static_cast<std::size_t>(W), [&](std::size_t wu) {
      const auto w = static_cast<Eigen::Index>(wu);
      Eigen::VectorXd g(L);
      for (Eigen::Index l = 0; l < L; ++l) {
        const double denom = gain(w, l) * out.relative(w, l);
        if (out.relative(w, l) < floor_value || !(denom > 0.0)) {
          g(l) = 0.0;
          ++guarded[wu];
        } else {
          g(l) = (mean(w, l) - dark(w, l)) / denom;
        }
      }
      const Eigen::VectorXd coef = model.solve * g;
      const Eigen::VectorXd fringes = model.design.leftCols(2 * nb) * coef.head(2 * nb);
      const Eigen::VectorXd envelope = moving_average(g - fringes, window);
      const double m = envelope.mean();
      if (m > 0.0) out.scan.row(w) += (envelope / m).transpose();
      else out.scan.row(w).array() += 1.0;
    });
  }
  for (Eigen::Index w = 0; w < W; ++w) out.scan.row(w) /= out.scan.row(w).mean();
  out.guarded = std::accumulate(guarded.begin(), guarded.end(), std::size_t{0});

  out.combined = (out.relative.array() * out.scan.array()).matrix();
  out.combined /= out.combined.mean();
  return out;
}

SpectralEstimate estimate_absolute_response(std::span<const Cube> absolute,
                                            std::span<const std::vector<double>> reference,
                                            const Map2& gain, const Map2& response,
                                            const Map2& dark, const TransformBasis& basis) {
  require(!absolute.empty() && absolute.size() == reference.size(), Errc::invalid_argument,
          "need one reference spectrum per absolute capture", "reference");
  const Eigen::Index W = dark.rows();
  const Eigen::Index L = dark.cols();
  const auto N = static_cast<Eigen::Index>(basis.wavenumbers());
  const std::vector<bool> band = reference_support(reference);
  const FringeModel model = fringe_model(basis, band);
  const Eigen::Index nb = model.band_size();
  const double floor_value = kGuard * response.maxCoeff();

  SpectralEstimate out;
  out.A = ComplexMap2::Zero(W, N);
  out.beta = Map2::Zero(W, L);
  Eigen::MatrixXi a_count = Eigen::MatrixXi::Zero(W, N);
  std::vector<std::size_t> guarded(static_cast<std::size_t>(W), 0);
  std::vector<double> sq_resid(static_cast<std::size_t>(W), 0.0);

  for (std::size_t i = 0; i < absolute.size(); ++i) {
    const auto& ref = reference[i];
    const double ref_mean = std::accumulate(ref.begin(), ref.end(), 0.0) / static_cast<double>(N);
    require(ref_mean > 0.0, Errc::numerical, "reference spectrum is zero",
            "reference_" + std::to_string(i));
    const Map2 mean = column_mean(absolute[i]);
    const SpectrumFit fit = spectrum_fit(model, ref);

    parallel_for(0, static_cast<std::size_t>(W), [&](std::size_t wu) {
      const auto w = static_cast<Eigen::Index>(wu);
      Eigen::VectorXd corrected(L);
      for (Eigen::Index l = 0; l < L; ++l) {
        const double denom = gain(w, l) * response(w, l);
        if (response(w, l) < floor_value || !(denom > 0.0)) {
          corrected(l) = 0.0;
          ++guarded[wu];
        } else {
          corrected(l) = (mean(w, l) - dark(w, l)) / denom;
        }
      }
      const Eigen::VectorXd coef = fit.solve * corrected;
      sq_resid[wu] += (model.design.rightCols(kBackgroundTerms) * coef.tail(kBackgroundTerms) *
                           fit.scale +
                       fit.fringes * coef.head(2 * nb) - corrected)
                          .squaredNorm();
      const Eigen::VectorXd ideal = fit.fringes * coef.head(2 * nb);
      for (Eigen::Index k = 0; k < nb; ++k) {
        const auto j = static_cast<Eigen::Index>(model.bins[static_cast<std::size_t>(k)]);
        out.A(w, j) += std::complex<double>(coef(k), coef(nb + k));
        a_count(w, j) += 1;
      }
      out.beta.row(w) += ((corrected - ideal) / ref_mean).transpose();
    });
  }

  for (Eigen::Index w = 0; w < W; ++w)
    for (Eigen::Index j = 0; j < N; ++j)
      if (a_count(w, j) > 0) out.A(w, j) /= static_cast<double>(a_count(w, j));
  out.beta /= static_cast<double>(absolute.size());
  out.guarded = std::accumulate(guarded.begin(), guarded.end(), std::size_t{0});
  const double total = std::accumulate(sq_resid.begin(), sq_resid.end(), 0.0);
  out.fit_rms = std::sqrt(total / static_cast<double>(W * L * static_cast<Eigen::Index>(absolute.size())));
  return out;
}

CalibrationResult calibrate_all(const CalibrationSet& input, const InstrumentProfile& profile,
                                double e) {
  input.validate(profile);
  require(e >= 0.0, Errc::invalid_argument, "must be non-negative", "e");

  // Levels in ascending brightness.
  std::vector<std::size_t> rel_order(input.relative.size()), abs_order(input.absolute.size());
  std::iota(rel_order.begin(), rel_order.end(), 0);
  std::iota(abs_order.begin(), abs_order.end(), 0);
  std::vector<double> rel_level(input.relative.size()), abs_level(input.absolute.size());
  for (std::size_t i = 0; i < rel_level.size(); ++i) rel_level[i] = cube_mean(input.relative[i]);
  for (std::size_t i = 0; i < abs_level.size(); ++i)
    abs_level[i] = std::accumulate(input.reference[i].begin(), input.reference[i].end(), 0.0);
  std::stable_sort(rel_order.begin(), rel_order.end(),
                   [&](std::size_t a, std::size_t b) { return rel_level[a] < rel_level[b]; });
  std::stable_sort(abs_order.begin(), abs_order.end(),
                   [&](std::size_t a, std::size_t b) { return abs_level[a] < abs_level[b]; });
  std::vector<Cube> relative, absolute;
  std::vector<std::vector<double>> reference;
  for (std::size_t i : rel_order) relative.push_back(input.relative[i]);
  for (std::size_t i : abs_order) {
    absolute.push_back(input.absolute[i]);
    reference.push_back(input.reference[i]);
  }

  CalibrationResult result;
  nlohmann::json& report = result.report;

  const DarkEstimate dark = estimate_dark(input.dark);
  report["dark"] = {{"invalid_count", 0},
                    {"notes", "D = mean over H, sigma_read = std over H of the dark capture"},
                    {"mean_dark", dark.dark.mean()},
                    {"mean_read_noise", dark.read_noise.mean()}};

  const GainEstimate gain = estimate_gain(relative, dark.dark, dark.read_noise);
  report["gain"] = {{"invalid_count", gain.invalid_count},
                    {"imputed_count", gain.imputed_count},
                    {"invalid_fraction", gain.invalid_fraction()},
                    {"levels", relative.size()},
                    {"notes", "K_i = shot variance / shot mean, uniform average over valid levels"},
                    {"mean_gain", gain.gain.mean()}};
  check_invalid_budget(gain.invalid_fraction(), "gain");

  const TransformBasis basis = build_basis(profile);
  const std::vector<bool> band = reference_support(reference);
  const ResponseEstimate response =
      estimate_response(relative, absolute, dark.dark, gain.gain, band, basis);
  const double response_guard =
      static_cast<double>(response.guarded) / static_cast<double>(response.combined.size() * absolute.size());
  report["response"] = {{"invalid_count", response.guarded},
                        {"invalid_fraction", response_guard},
                        {"window", (profile.opd_samples() + 7) / 8},
                        {"notes", "M = M_R * M_A, mean 1; M_A from fringe-removed moving average"}};
  check_invalid_budget(response_guard, "response");

  const SpectralEstimate spectral = estimate_absolute_response(
      absolute, reference, gain.gain, response.combined, dark.dark, basis);
  std::size_t band_count = 0;
  for (bool b : band) band_count += b ? 1 : 0;
  const double spectral_guard = static_cast<double>(spectral.guarded) /
                                static_cast<double>(static_cast<std::size_t>(profile.width) *
                                                        (profile.opd_samples() + band_count) *
                                                        absolute.size());
  report["absolute"] = {{"invalid_count", spectral.guarded},
                        {"invalid_fraction", spectral_guard},
                        {"band_bins", band_count},
                        {"fit_rms", spectral.fit_rms},
                        {"levels", absolute.size()},
                        {"notes", "A = fitted spectrum / B_A; beta = residual / mean(B_A)"}};
  check_invalid_budget(spectral_guard, "absolute");

  DegradationParams& p = result.params;
  p.profile = profile;
  p.A = spectral.A;
  p.beta = spectral.beta;
  p.M = response.combined;
  p.K = gain.gain;
  p.D = dark.dark;
  p.sigma_read = dark.read_noise;
  p.e = e;
  p.validate_shapes();
  return result;
}

double ParamErrors::max() const {
  return std::max({dark, read_noise, gain, response, absolute, background});
}

nlohmann::json ParamErrors::to_json() const {
  return {{"dark", dark},         {"read_noise", read_noise}, {"gain", gain},
          {"response", response}, {"absolute", absolute},     {"background", background}};
}

namespace {

double median_relative_error(const Map2& est, const Map2& truth) {
  std::vector<double> err;
  err.reserve(static_cast<std::size_t>(truth.size()));
  for (Eigen::Index k = 0; k < truth.size(); ++k)
    if (truth.data()[k] != 0.0)
      err.push_back(std::abs(est.data()[k] - truth.data()[k]) / std::abs(truth.data()[k]));
  return median(std::move(err));
}

}  // namespace

ParamErrors compare_params(const DegradationParams& est, const DegradationParams& truth) {
  require(est.width() == truth.width() && est.opd_samples() == truth.opd_samples() &&
              est.wavenumbers() == truth.wavenumbers(),
          Errc::shape_mismatch, "parameter sets differ in shape", "params");
  ParamErrors out;
  out.dark = median_relative_error(est.D, truth.D);
  out.read_noise = median_relative_error(est.sigma_read, truth.sigma_read);
  out.gain = median_relative_error(est.K, truth.K);
  out.response = median_relative_error(est.M, truth.M);
  out.background = median_relative_error(est.beta, truth.beta);
  std::vector<double> err;
  for (Eigen::Index w = 0; w < truth.A.rows(); ++w)
    for (Eigen::Index j = 0; j < truth.A.cols(); ++j) {
      if (!truth.profile.in_band(truth.profile.nu_per_nm[static_cast<std::size_t>(j)])) continue;
      const std::complex<double> t = truth.A(w, j);
      if (std::abs(t) == 0.0) continue;
      err.push_back(std::abs(est.A(w, j) - t) / std::abs(t));
    }
  out.absolute = median(std::move(err));
  return out;
}

}  // namespace ihi
