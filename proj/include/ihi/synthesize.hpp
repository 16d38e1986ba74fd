#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ihi/cube.hpp"
#include "ihi/degrade.hpp"
#include "ihi/params.hpp"
#include "ihi/transform.hpp"

namespace ihi {

inline constexpr double kDefaultTargetRate = 1e4;

struct Patch {
  Cube cube;
  std::size_t row = 0;
  std::size_t col = 0;
};

/// Grid-aligned patches in row-major origin order; partial edge patches are
/// dropped.
std::vector<Patch> make_patches(const Cube& hsi, std::size_t patch_h, std::size_t patch_w,
                                std::size_t stride);

struct ScaledPatch {
  Cube hsi;       // scaled wavelength cube
  double factor;  // scaled = factor * original
};

/// Scales the patch so the mean of its in-band wavenumber resample equals
/// `target_rate`.
ScaledPatch photometric_scale(const Cube& hsi, const InstrumentProfile& profile,
                              double target_rate = kDefaultTargetRate);

/// Inverse of photometric_scale.
Cube unscale(const Cube& cube, double factor);

struct SamplePair {
  Cube interferogram;  // I_d, opd axis, f32 storage
  Cube gt_nu;          // B0, wavenumber axis, f64 storage
  Cube gt_hsi;         // scaled wavelength patch, f64 storage
  double factor = 1.0;
};

SamplePair synthesize_pair(const Cube& hsi_patch, const DegradationParams& params,
                           const TransformBasis& basis, RngHandle rng,
                           double target_rate = kDefaultTargetRate,
                           NoiseMode mode = NoiseMode::stochastic);

struct DatasetConfig {
  std::size_t patch_height = 0;  // 0: profile width
  std::size_t stride = 0;        // 0: patch height
  std::size_t per_image_cap = 0;  // 0: unlimited
  std::size_t test_count = 1;    // held out from the end of the sorted source list
  std::vector<std::string> test_sources;  // explicit held-out stems; overrides test_count
  double target_rate = kDefaultTargetRate;
  std::uint64_t master_seed = 1;
  NoiseMode mode = NoiseMode::stochastic;
};

nlohmann::json dataset_config_to_json(const DatasetConfig& config);

struct DatasetSample {
  std::string id;      // e.g. train/0003
  std::string split;   // train | test
  std::string source;  // source stem
  std::size_t row = 0, col = 0, height = 0, width = 0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  double factor = 1.0;
};

struct DatasetManifest {
  std::string profile_id;
  std::string params_dir;  // relative to the dataset root
  std::string params_digest;
  std::vector<std::string> source_paths;  // sorted, absolute
  DatasetConfig config;
  std::vector<DatasetSample> samples;

  nlohmann::json to_json() const;
  static DatasetManifest from_json(const nlohmann::json& j);
};

/// Wavelength-axis .ihic cubes in `source_dir`, sorted by file name.
std::vector<std::filesystem::path> list_sources(const std::filesystem::path& source_dir);

/// Writes train/, test/, params/ and manifest.json under `out_dir`.
DatasetManifest make_dataset(const std::filesystem::path& source_dir,
                             const DegradationParams& params, const DatasetConfig& config,
                             const std::filesystem::path& out_dir);

DatasetManifest read_manifest(const std::filesystem::path& dataset_dir);

/// Re-synthesizes one manifest entry from its source cube.
SamplePair replay_sample(const DatasetManifest& manifest, const DatasetSample& sample,
                         const DegradationParams& params, const TransformBasis& basis);

/// Paths of a sample's interferogram, wavenumber truth and wavelength truth.
struct SampleFiles {
  std::filesystem::path interf, gt_nu, gt_hsi;
};
SampleFiles sample_files(const std::filesystem::path& dataset_dir, const DatasetSample& sample);

/// Replays every sample and compares encoded payloads with the stored files.
/// Returns the ids that differ.
std::vector<std::string> verify_dataset(const std::filesystem::path& dataset_dir);

}  // namespace ihi
