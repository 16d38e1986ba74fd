#pragma once

#include "ihi/cube.hpp"
#include "ihi/params.hpp"
#include "ihi/rng.hpp"
#include "ihi/transform.hpp"

namespace ihi {

/// `deterministic` replaces the Poisson draw by its rate and drops read noise
/// and gain sampling. It exists for composition tests only.
enum class NoiseMode { stochastic, deterministic };

/// I_O = M ⊙ (I₁ + β ⊙ μ_N(B0)), I₁ = ℱ{A ⊙ B0}
Cube optical_degrade(const Cube& b0, const DegradationParams& params, const TransformBasis& basis);

/// Electronic parameters after the per-scene gain draw log(e') ~ N(0, e).
struct ElectronicState {
  double gain = 1.0;  // e'
  Map2 K;
  Map2 D;
  Map2 sigma_read;
};

ElectronicState sample_electronic_gain(const DegradationParams& params, RngHandle rng);
ElectronicState unit_electronic_state(const DegradationParams& params);

/// I_d = K' ⊙ Poisson(max(I_O, 0)) + D' + N(0, σ'_read). Each element draws
/// from its own counter stream keyed by its flat (h, w, i) index.
Cube electronic_degrade(const Cube& optical, const ElectronicState& state, RngHandle rng,
                        NoiseMode mode = NoiseMode::stochastic);

/// Optical stage, one gain draw, electronic stage.
Cube degrade(const Cube& b0, const DegradationParams& params, const TransformBasis& basis,
             RngHandle rng, NoiseMode mode = NoiseMode::stochastic);

}  // namespace ihi
