#pragma once

#include <memory>
#include <string>

#include <json.hpp>

#include "ihi/cube.hpp"

namespace ihi {

/// Denoising step of the unfolding iteration. Output has the input's shape
/// and axis and must be finite.
class Prior {
 public:
  virtual ~Prior() = default;
  virtual Cube denoise(const Cube& x, std::size_t stage) = 0;
  virtual std::string id() const = 0;
  virtual nlohmann::json describe() const { return {{"id", id()}}; }
};

class IdentityPrior final : public Prior {
 public:
  Cube denoise(const Cube& x, std::size_t) override { return x; }
  std::string id() const override { return "identity"; }
};

/// Soft-thresholds the first differences along the channel axis and
/// integrates back, keeping each pixel's channel mean.
Cube soft_threshold(const Cube& x, double tau);

class SoftThresholdPrior final : public Prior {
 public:
  explicit SoftThresholdPrior(double tau);
  Cube denoise(const Cube& x, std::size_t) override { return soft_threshold(x, tau_); }
  std::string id() const override { return "soft"; }
  nlohmann::json describe() const override { return {{"id", id()}, {"tau", tau_}}; }

 private:
  double tau_;
};

/// Per-channel ROF denoising, min_u ½‖u − f‖² + λ TV(u), by Chambolle's
/// dual projection (step 1/8) over the H x W plane.
Cube tv_denoise(const Cube& x, double lambda, std::size_t iterations);

/// Per-channel robust noise estimate from vertical (along-H) first
/// differences: 1.4826 · median|Δ| / √2.
std::vector<double> channel_noise_mad(const Cube& x);

class TvPrior final : public Prior {
 public:
  /// lambda < 0 selects λ_c = scale · σ̂_c per channel.
  TvPrior(double lambda, std::size_t iterations, double scale = 1.0);
  Cube denoise(const Cube& x, std::size_t stage) override;
  std::string id() const override { return "tv"; }
  nlohmann::json describe() const override;

 private:
  double lambda_;
  std::size_t iterations_;
  double scale_;
};

/// {"id": "identity"} | {"id": "soft", "tau": τ} |
/// {"id": "tv", "lambda": λ or "auto", "iterations": n, "scale": s} |
/// {"id": "external", ...bridge endpoint...}
std::unique_ptr<Prior> make_prior(const nlohmann::json& config);

}  // namespace ihi
