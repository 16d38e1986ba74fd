#include "ihi/synthesize.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>

#include "ihi/digest.hpp"
#include "ihi/error.hpp"
#include "ihi/io.hpp"
#include "ihi/parallel.hpp"
#include "ihi/resample.hpp"
#include "ihi/rng.hpp"

namespace ihi {

namespace fs = std::filesystem;

namespace {

std::string sample_name(std::size_t index) {
  std::string s = std::to_string(index);
  return std::string(s.size() < 4 ? 4 - s.size() : 0, '0') + s;
}

const char* mode_name(NoiseMode m) {
  return m == NoiseMode::deterministic ? "deterministic" : "stochastic";
}

NoiseMode parse_mode(const std::string& s) {
  if (s == "deterministic") return NoiseMode::deterministic;
  if (s == "stochastic") return NoiseMode::stochastic;
  fail(Errc::invalid_argument, "unknown noise mode '" + s + "'", "mode");
}

Cube crop(const Cube& src, std::size_t row, std::size_t col, std::size_t h, std::size_t w) {
  Cube out(h, w, src.channels(), src.axis(), src.profile_id(), src.storage());
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c) {
      const auto in = src.pixel(row + r, col + c);
      std::copy(in.begin(), in.end(), out.pixel(r, c).begin());
    }
  return out;
}

Cube load_source(const fs::path& path, const InstrumentProfile& profile) {
  Cube cube = read_cube(path);
  expect_axis(cube, AxisKind::wavelength, profile.bands(), path.string().c_str());
  expect_finite(cube, path.string().c_str());
  return cube;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(Errc::io, "cannot write file", path.string());
  out << j.dump(1) << '\n';
}

void copy_params(const DegradationParams& params, const fs::path& dir) { write_params(params, dir); }

}  // namespace

std::vector<Patch> make_patches(const Cube& hsi, std::size_t patch_h, std::size_t patch_w,
                                std::size_t stride) {
  require(patch_h > 0 && patch_w > 0 && stride > 0, Errc::degenerate_axis,
          "patch size and stride must be positive", "patch");
  require(patch_h <= hsi.height() && patch_w <= hsi.width(), Errc::degenerate_axis,
          "patch is larger than the image", "patch");
  std::vector<Patch> out;
  for (std::size_t r = 0; r + patch_h <= hsi.height(); r += stride)
    for (std::size_t c = 0; c + patch_w <= hsi.width(); c += stride)
      out.push_back({crop(hsi, r, c, patch_h, patch_w), r, c});
  return out;
}

ScaledPatch photometric_scale(const Cube& hsi, const InstrumentProfile& profile,
                              double target_rate) {
  require(target_rate > 0.0, Errc::invalid_argument, "must be positive", "target_rate");
  double peak = 0.0;
  for (double v : hsi.values()) {
    require(v >= 0.0, Errc::invalid_argument, "patch must be non-negative", "hsi");
    peak = std::max(peak, v);
  }
  require(peak > 0.0, Errc::invalid_argument, "patch is all zero", "hsi");

  const Cube nu = resample_hsi_to_wavenumber(hsi, profile);
  const std::vector<bool> band = profile.band_mask();
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t h = 0; h < nu.height(); ++h)
    for (std::size_t w = 0; w < nu.width(); ++w) {
      const auto px = nu.pixel(h, w);
      for (std::size_t j = 0; j < px.size(); ++j)
        if (band[j]) {
          sum += px[j];
          ++count;
        }
    }
  const double mean = count ? sum / static_cast<double>(count) : 0.0;
  require(mean > 0.0, Errc::invalid_argument, "patch has no in-band signal", "hsi");
  const double factor = target_rate / mean;
  return {unscale(hsi, 1.0 / factor), factor};
}

Cube unscale(const Cube& cube, double factor) {
  require(factor > 0.0, Errc::invalid_argument, "must be positive", "factor");
  Cube out = cube;
  for (double& v : out.values()) v /= factor;
  return out;
}

SamplePair synthesize_pair(const Cube& hsi_patch, const DegradationParams& params,
                           const TransformBasis& basis, RngHandle rng, double target_rate,
                           NoiseMode mode) {
  params.validate();
  require(hsi_patch.width() == params.width(), Errc::shape_mismatch,
          "patch width must equal the detector width", "W");
  ScaledPatch scaled = photometric_scale(hsi_patch, params.profile, target_rate);
  SamplePair out;
  out.factor = scaled.factor;
  out.gt_hsi = std::move(scaled.hsi);
  out.gt_hsi.set_storage(ScalarType::f64);
  out.gt_nu = resample_hsi_to_wavenumber(out.gt_hsi, params.profile);
  out.gt_nu.set_storage(ScalarType::f64);
  out.interferogram = degrade(out.gt_nu, params, basis, rng, mode);
  out.interferogram.set_storage(ScalarType::f32);
  return out;
}

nlohmann::json dataset_config_to_json(const DatasetConfig& c) {
  return {{"patch_height", c.patch_height},   {"stride", c.stride},
          {"per_image_cap", c.per_image_cap}, {"test_count", c.test_count},
          {"test_sources", c.test_sources},   {"target_rate", c.target_rate},
          {"master_seed", c.master_seed},     {"mode", mode_name(c.mode)}};
}

nlohmann::json DatasetManifest::to_json() const {
  nlohmann::json s = nlohmann::json::array();
  for (const auto& x : samples)
    s.push_back({{"id", x.id},         {"split", x.split},   {"source", x.source},
                 {"row", x.row},       {"col", x.col},       {"height", x.height},
                 {"width", x.width},   {"seed", x.seed},     {"stream", x.stream},
                 {"factor", x.factor}});
  return {{"version", 1},
          {"profile", profile_id},
          {"params_dir", params_dir},
          {"params_digest", params_digest},
          {"sources", source_paths},
          {"config", dataset_config_to_json(config)},
          {"samples", s}};
}

DatasetManifest DatasetManifest::from_json(const nlohmann::json& j) {
  DatasetManifest m;
  try {
    require(j.at("version").get<int>() == 1, Errc::version_mismatch, "unsupported manifest",
            "version");
    m.profile_id = j.at("profile").get<std::string>();
    m.params_dir = j.at("params_dir").get<std::string>();
    m.params_digest = j.at("params_digest").get<std::string>();
    m.source_paths = j.at("sources").get<std::vector<std::string>>();
    const auto& c = j.at("config");
    m.config.patch_height = c.at("patch_height").get<std::size_t>();
    m.config.stride = c.at("stride").get<std::size_t>();
    m.config.per_image_cap = c.at("per_image_cap").get<std::size_t>();
    m.config.test_count = c.at("test_count").get<std::size_t>();
    m.config.test_sources = c.at("test_sources").get<std::vector<std::string>>();
    m.config.target_rate = c.at("target_rate").get<double>();
    m.config.master_seed = c.at("master_seed").get<std::uint64_t>();
    m.config.mode = parse_mode(c.at("mode").get<std::string>());
    for (const auto& x : j.at("samples")) {
      DatasetSample s;
      s.id = x.at("id").get<std::string>();
      s.split = x.at("split").get<std::string>();
      s.source = x.at("source").get<std::string>();
      s.row = x.at("row").get<std::size_t>();
      s.col = x.at("col").get<std::size_t>();
      s.height = x.at("height").get<std::size_t>();
      s.width = x.at("width").get<std::size_t>();
      s.seed = x.at("seed").get<std::uint64_t>();
      s.stream = x.at("stream").get<std::uint64_t>();
      s.factor = x.at("factor").get<double>();
      m.samples.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::io, std::string("malformed manifest: ") + e.what(), "manifest.json");
  }
  return m;
}

std::vector<fs::path> list_sources(const fs::path& source_dir) {
  if (!fs::is_directory(source_dir)) fail(Errc::io, "source directory not found", source_dir.string());
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(source_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".ihic")
      out.push_back(fs::absolute(entry.path()));
  std::sort(out.begin(), out.end());
  require(!out.empty(), Errc::invalid_argument, "no .ihic source cubes", source_dir.string());
  return out;
}

SampleFiles sample_files(const fs::path& dir, const DatasetSample& s) {
  const fs::path base = dir / s.id;
  return {base.string() + ".interf.ihic", base.string() + ".gt_nu.ihic",
          base.string() + ".gt_hsi.ihic"};
}

DatasetManifest make_dataset(const fs::path& source_dir, const DegradationParams& params,
                             const DatasetConfig& config, const fs::path& out_dir) {
  params.validate();
  const InstrumentProfile& profile = params.profile;
  const std::vector<fs::path> sources = list_sources(source_dir);

  DatasetManifest m;
  m.profile_id = profile.id;
  m.params_dir = "params";
  m.config = config;
  if (m.config.patch_height == 0) m.config.patch_height = profile.width;
  if (m.config.stride == 0) m.config.stride = m.config.patch_height;
  for (const auto& p : sources) m.source_paths.push_back(p.string());

  std::vector<bool> held_out(sources.size(), false);
  if (!config.test_sources.empty()) {
    for (const auto& name : config.test_sources) {
      bool found = false;
      for (std::size_t i = 0; i < sources.size(); ++i)
        if (sources[i].stem().string() == name) held_out[i] = found = true;
      require(found, Errc::invalid_argument, "held-out source '" + name + "' not found",
              "test_sources");
    }
  } else {
    const std::size_t n = std::min(config.test_count, sources.size());
    for (std::size_t i = sources.size() - n; i < sources.size(); ++i) held_out[i] = true;
  }

  // Sample list first; synthesis runs afterwards per sample.
  std::size_t train_index = 0, test_index = 0;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const std::string stem = sources[i].stem().string();
    const Cube src = load_source(sources[i], profile);
    require(src.width() >= profile.width, Errc::shape_mismatch,
            "source narrower than the detector width", sources[i].string());
    if (held_out[i]) {
      require(src.width() == profile.width, Errc::shape_mismatch,
              "test scenes must have width W", sources[i].string());
      DatasetSample s{"test/" + sample_name(test_index++), "test", stem, 0, 0, src.height(),
                      src.width(), derive_seed(config.master_seed, stem, 0), 0, 1.0};
      m.samples.push_back(s);
      continue;
    }
    if (src.height() < m.config.patch_height) continue;
    std::size_t taken = 0;
    std::size_t index = 0;
    for (std::size_t r = 0; r + m.config.patch_height <= src.height(); r += m.config.stride)
      for (std::size_t c = 0; c + profile.width <= src.width(); c += m.config.stride, ++index) {
        if (config.per_image_cap && taken >= config.per_image_cap) break;
        DatasetSample s{"train/" + sample_name(train_index++), "train", stem, r, c,
                        m.config.patch_height, profile.width,
                        derive_seed(config.master_seed, stem, index), 0, 1.0};
        m.samples.push_back(s);
        ++taken;
      }
  }
  require(!m.samples.empty(), Errc::invalid_argument, "sources produced no samples", "sources");

  std::error_code ec;
  fs::create_directories(out_dir / "train", ec);
  fs::create_directories(out_dir / "test", ec);
  if (ec) fail(Errc::io, "cannot create dataset directory: " + ec.message(), out_dir.string());
  copy_params(params, out_dir / m.params_dir);
  m.params_digest = directory_digest(out_dir / m.params_dir);

  const TransformBasis basis = build_basis(profile);
  std::map<std::string, Cube> cache;
  for (std::size_t i = 0; i < sources.size(); ++i)
    cache.emplace(sources[i].stem().string(), load_source(sources[i], profile));

  parallel_for(0, m.samples.size(), [&](std::size_t k) {
    DatasetSample& s = m.samples[k];
    const Cube patch = crop(cache.at(s.source), s.row, s.col, s.height, s.width);
    SamplePair pair =
        synthesize_pair(patch, params, basis, {s.seed, s.stream}, config.target_rate, config.mode);
    s.factor = pair.factor;
    const SampleFiles f = sample_files(out_dir, s);
    write_cube(pair.interferogram, profile, f.interf);
    write_cube(pair.gt_nu, profile, f.gt_nu);
    write_cube(pair.gt_hsi, profile, f.gt_hsi);
  });

  write_json(out_dir / "manifest.json", m.to_json());
  return m;
}

DatasetManifest read_manifest(const fs::path& dataset_dir) {
  const fs::path path = dataset_dir / "manifest.json";
  std::ifstream in(path);
  if (!in) fail(Errc::io, "manifest not found", path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::io, std::string("malformed manifest: ") + e.what(), path.string());
  }
  return DatasetManifest::from_json(j);
}

SamplePair replay_sample(const DatasetManifest& m, const DatasetSample& s,
                         const DegradationParams& params, const TransformBasis& basis) {
  for (const auto& p : m.source_paths)
    if (fs::path(p).stem().string() == s.source) {
      const Cube src = load_source(p, params.profile);
      require(s.row + s.height <= src.height() && s.col + s.width <= src.width(),
              Errc::shape_mismatch, "sample window lies outside its source", s.id);
      return synthesize_pair(crop(src, s.row, s.col, s.height, s.width), params, basis,
                             {s.seed, s.stream}, m.config.target_rate, m.config.mode);
    }
  fail(Errc::io, "source '" + s.source + "' not listed in the manifest", s.id);
}

std::vector<std::string> verify_dataset(const fs::path& dataset_dir) {
  const DatasetManifest m = read_manifest(dataset_dir);
  const DegradationParams params = read_params(dataset_dir / m.params_dir);
  const TransformBasis basis = build_basis(params.profile);
  std::vector<std::string> mismatched;
  for (const auto& s : m.samples) {
    const SamplePair pair = replay_sample(m, s, params, basis);
    const SampleFiles f = sample_files(dataset_dir, s);
    const bool same = encode_cube(pair.interferogram) == read_file_bytes(f.interf) &&
                      encode_cube(pair.gt_nu) == read_file_bytes(f.gt_nu) &&
                      encode_cube(pair.gt_hsi) == read_file_bytes(f.gt_hsi) &&
                      pair.factor == s.factor;
    if (!same) mismatched.push_back(s.id);
  }
  return mismatched;
}

}  // namespace ihi
