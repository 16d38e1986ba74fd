#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "ihi/cube.hpp"
#include "ihi/params.hpp"
#include "ihi/priors.hpp"
#include "ihi/transform.hpp"

namespace ihi {

enum class BackgroundMode { none, dark_only, dark_background };
const char* background_name(BackgroundMode mode);
BackgroundMode parse_background(const std::string& name);

/// Parameters plus the shared transform tables and inverse cache.
struct ReconstructContext {
  DegradationParams params;
  TransformBasis basis;
  std::shared_ptr<const InverseOperator> inverse;
};

/// Validates the parameters and prepares the basis and an empty inverse cache.
ReconstructContext make_context(DegradationParams params);

/// none: y. dark_only: y − D. dark_background: additionally removes
/// K ⊙ M ⊙ β ⊙ μ̂_N with μ̂_N solved per pixel from the first-pass inverse.
Cube precorrect(const Cube& y, const ReconstructContext& ctx, BackgroundMode mode);

/// Wavenumber estimate F′ y′ after dark and background removal.
Cube direct_spectrum(const Cube& y, const ReconstructContext& ctx);

/// precorrect(dark_background) → F′ → wavelength resample.
Cube reconstruct_direct(const Cube& y, const ReconstructContext& ctx);

/// Dark removal, division by K ⊙ M, triangular apodization peaked at the
/// zero-OPD sample, cosine-basis pseudo-inverse, division by |A| in band,
/// wavelength resample. No phase correction.
Cube reconstruct_traditional(const Cube& y, const ReconstructContext& ctx);

/// Triangular apodization weights over the OPD samples, 1 at index c.
std::vector<double> apodization_window(std::size_t samples, std::size_t center);

/// Step weight applied to the OPD-domain residual before F′.
struct StepWeights {
  enum class Kind { scalar, column, map } kind = Kind::scalar;
  double scalar = 1.0;
  Map2 values;  // W x 1 (column) or W x L (map)

  static StepWeights from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  void validate(std::size_t width, std::size_t opd_samples) const;
  double at(std::size_t w, std::size_t i) const;
};

struct UnfoldConfig {
  std::size_t stages = 5;
  StepWeights alpha;
  nlohmann::json prior = {{"id", "identity"}};
  BackgroundMode background = BackgroundMode::dark_only;
  bool momentum = false;

  void validate() const;
  nlohmann::json to_json() const;
};

struct UnfoldResult {
  Cube hsi;                    // wavelength axis
  Cube spectrum;               // final wavenumber iterate x_K
  std::vector<double> trace;   // ‖y′ − F x_k‖, k = 0..K
};

/// x₀ = F′y′; z = x_k + F′(α ⊙ (y′ − F x_k)) [+ x_k − x_{k−1}]; x_{k+1} = P(z, k).
UnfoldResult unfold(const Cube& y, const ReconstructContext& ctx, const UnfoldConfig& config,
                    Prior& prior);
UnfoldResult unfold(const Cube& y, const ReconstructContext& ctx, const UnfoldConfig& config);

}  // namespace ihi
