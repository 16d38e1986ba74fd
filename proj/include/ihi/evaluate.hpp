#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ihi/metrics.hpp"
#include "ihi/reconstruct.hpp"

namespace ihi {

/// passthrough (ground truth), fprime, traditional, unfold
enum class Method { passthrough, fprime, traditional, unfold };
const char* method_name(Method m);
Method parse_method(const std::string& name);

/// Wavelength-domain reconstruction of one interferogram.
Cube run_method(Method method, const Cube& y, const ReconstructContext& ctx,
                const UnfoldConfig& unfold_config);

struct EvalConfig {
  Method method = Method::fprime;
  UnfoldConfig unfold;
  std::string split = "test";
  SsimOptions ssim;
  std::filesystem::path error_dir;  // empty: no error cubes

  nlohmann::json to_json() const;
};

struct SceneScore {
  std::string id;
  PsnrValue psnr;
  double ssim = 0.0;
  double seconds = 0.0;
};

struct EvalReport {
  std::string method;
  std::string config_digest;
  std::vector<SceneScore> scenes;
  PsnrValue mean_psnr;
  double mean_ssim = 0.0;
  double runtime_seconds = 0.0;
  nlohmann::json config;

  /// Digest of everything except timings.
  std::string digest() const;
  nlohmann::json to_json() const;
  /// Fixed-width table, PSNR and SSIM with two and four decimals.
  std::string table() const;
};

/// Arithmetic mean; infinite if any entry is.
PsnrValue mean_psnr(const std::vector<SceneScore>& scenes);

/// Reconstructs every sample of `config.split` and scores it against the
/// stored wavelength truth, both mapped back to the source scale.
EvalReport evaluate_run(const std::filesystem::path& dataset_dir, const EvalConfig& config);

}  // namespace ihi
