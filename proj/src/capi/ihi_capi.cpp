#include "ihi/ihi.h"

#include <cstdio>
#include <cstring>
#include <optional>
#include <string>

#include <json.hpp>

#include "ihi/bridge.hpp"
#include "ihi/calibrate.hpp"
#include "ihi/digest.hpp"
#include "ihi/error.hpp"
#include "ihi/evaluate.hpp"
#include "ihi/instrument.hpp"
#include "ihi/io.hpp"
#include "ihi/metrics.hpp"
#include "ihi/parallel.hpp"
#include "ihi/reconstruct.hpp"
#include "ihi/resample.hpp"
#include "ihi/selftest.hpp"
#include "ihi/synthesize.hpp"

struct ihi_profile {
  ihi::InstrumentProfile value;
};

struct ihi_cube {
  ihi::Cube value;
  std::optional<ihi::InstrumentProfile> profile;
};

struct ihi_params {
  ihi::DegradationParams value;
};

struct ihi_reconstructor {
  ihi::ReconstructContext ctx;
};

namespace {

thread_local std::string last_error;

ihi_status set_error(ihi_status status, std::string message) {
  last_error = std::move(message);
  return status;
}

template <class Fn>
ihi_status guarded(Fn&& fn) {
  try {
    last_error.clear();
    fn();
    return IHI_OK;
  } catch (const ihi::Error& e) {
    return set_error(static_cast<ihi_status>(e.code()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return set_error(IHI_ERR_INVALID_ARGUMENT, std::string("options: ") + e.what());
  } catch (const std::bad_alloc&) {
    return set_error(IHI_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(IHI_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(IHI_ERR_INTERNAL, "unknown error");
  }
}

void need(const void* p, const char* name) {
  if (!p) ihi::fail(ihi::Errc::invalid_argument, "must not be NULL", name);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void put_string(char** out, const std::string& s) {
  if (out) *out = dup_string(s);
}

nlohmann::json parse_options(const char* text) {
  if (!text || !*text) return nlohmann::json::object();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    ihi::fail(ihi::Errc::invalid_argument, std::string("malformed JSON: ") + e.what(), "options");
  }
  if (!j.is_object()) ihi::fail(ihi::Errc::invalid_argument, "expected a JSON object", "options");
  return j;
}

ihi::AxisKind to_axis(ihi_axis a) {
  switch (a) {
    case IHI_AXIS_WAVELENGTH: return ihi::AxisKind::wavelength;
    case IHI_AXIS_WAVENUMBER: return ihi::AxisKind::wavenumber;
    case IHI_AXIS_OPD: return ihi::AxisKind::opd;
  }
  ihi::fail(ihi::Errc::invalid_argument, "unknown axis", "axis");
}

ihi_axis from_axis(ihi::AxisKind a) {
  switch (a) {
    case ihi::AxisKind::wavelength: return IHI_AXIS_WAVELENGTH;
    case ihi::AxisKind::wavenumber: return IHI_AXIS_WAVENUMBER;
    case ihi::AxisKind::opd: return IHI_AXIS_OPD;
  }
  return IHI_AXIS_WAVELENGTH;
}

ihi::NoiseMode noise_mode(const nlohmann::json& j) {
  const std::string m = j.value("mode", std::string("stochastic"));
  if (m == "stochastic") return ihi::NoiseMode::stochastic;
  if (m == "deterministic") return ihi::NoiseMode::deterministic;
  ihi::fail(ihi::Errc::invalid_argument, "unknown noise mode '" + m + "'", "mode");
}

ihi::SyntheticInstrumentOptions instrument_options(const nlohmann::json& j) {
  ihi::SyntheticInstrumentOptions o;
  o.seed = j.value("seed", o.seed);
  o.gain = j.value("gain", o.gain);
  o.dark = j.value("dark", o.dark);
  o.read_noise = j.value("read_noise", o.read_noise);
  o.e = j.value("e", o.e);
  o.phase_rad = j.value("phase_rad", o.phase_rad);
  o.phase_slope_rad = j.value("phase_slope_rad", o.phase_slope_rad);
  o.scan_distortion = j.value("scan_distortion", o.scan_distortion);
  o.background_margin = j.value("background_margin", o.background_margin);
  return o;
}

ihi::UnfoldConfig unfold_config(const nlohmann::json& j) {
  ihi::UnfoldConfig c;
  c.stages = j.value("stages", c.stages);
  if (j.contains("alpha")) c.alpha = ihi::StepWeights::from_json(j.at("alpha"));
  if (j.contains("prior")) c.prior = j.at("prior");
  if (j.contains("background"))
    c.background = ihi::parse_background(j.at("background").get<std::string>());
  c.momentum = j.value("momentum", c.momentum);
  return c;
}

ihi::SsimOptions ssim_options(const nlohmann::json& j) {
  ihi::SsimOptions o;
  o.window = j.value("window", o.window);
  o.sigma = j.value("sigma", o.sigma);
  o.k1 = j.value("k1", o.k1);
  o.k2 = j.value("k2", o.k2);
  if (j.contains("peak")) o.peak = j.at("peak").get<double>();
  return o;
}

ihi_cube* wrap(ihi::Cube c, std::optional<ihi::InstrumentProfile> p = std::nullopt) {
  return new ihi_cube{std::move(c), std::move(p)};
}

}  // namespace

extern "C" {

const char* ihi_version(void) { return "1.0.0"; }

const char* ihi_last_error(void) { return last_error.c_str(); }

const char* ihi_status_name(ihi_status status) {
  if (status == IHI_OK) return "ok";
  if (status == IHI_ERR_INTERNAL) return "internal";
  if (status >= IHI_ERR_INVALID_ARGUMENT && status <= IHI_ERR_NUMERICAL)
    return ihi::errc_name(static_cast<ihi::Errc>(status)).data();
  return "unknown";
}

void ihi_string_free(char* text) { std::free(text); }

void ihi_set_threads(size_t count) { ihi::set_thread_count(count); }

size_t ihi_threads(void) { return ihi::thread_count(); }

ihi_status ihi_digest_text(const char* text, char** out_hex) {
  return guarded([&] {
    need(text, "text");
    need(out_hex, "out_hex");
    *out_hex = dup_string(ihi::digest_hex(text));
  });
}

ihi_status ihi_digest_path(const char* path, char** out_hex) {
  return guarded([&] {
    need(path, "path");
    need(out_hex, "out_hex");
    *out_hex = dup_string(ihi::path_digest(path));
  });
}

ihi_status ihi_profile_create(const char* name, size_t height, ihi_profile** out) {
  return guarded([&] {
    need(name, "name");
    need(out, "out");
    *out = new ihi_profile{ihi::profile_by_name(name, height)};
  });
}

ihi_status ihi_profile_from_json(const char* json, ihi_profile** out) {
  return guarded([&] {
    need(json, "json");
    need(out, "out");
    *out = new ihi_profile{ihi::profile_from_json(parse_options(json))};
  });
}

ihi_status ihi_profile_to_json(const ihi_profile* profile, char** out_json) {
  return guarded([&] {
    need(profile, "profile");
    need(out_json, "out_json");
    *out_json = dup_string(ihi::profile_to_json(profile->value).dump());
  });
}

ihi_status ihi_profile_dims(const ihi_profile* profile, size_t* height, size_t* width,
                            size_t* opd_samples, size_t* wavenumbers, size_t* bands,
                            size_t* center) {
  return guarded([&] {
    need(profile, "profile");
    const auto& p = profile->value;
    if (height) *height = p.height;
    if (width) *width = p.width;
    if (opd_samples) *opd_samples = p.opd_samples();
    if (wavenumbers) *wavenumbers = p.wavenumbers();
    if (bands) *bands = p.bands();
    if (center) *center = p.center_index;
  });
}

void ihi_profile_free(ihi_profile* profile) { delete profile; }

ihi_status ihi_cube_create(size_t height, size_t width, size_t channels, ihi_axis axis,
                           const char* profile_id, const double* values, ihi_cube** out) {
  return guarded([&] {
    need(out, "out");
    ihi::Cube c(height, width, channels, to_axis(axis), profile_id ? profile_id : "");
    if (values) std::copy(values, values + c.size(), c.values().begin());
    *out = wrap(std::move(c));
  });
}

ihi_status ihi_cube_read(const char* path, ihi_cube** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    ihi::CubeFile f = ihi::read_cube_file(path);
    *out = wrap(std::move(f.cube), std::move(f.profile));
  });
}

ihi_status ihi_cube_write(const ihi_cube* cube, const ihi_profile* profile, const char* path) {
  return guarded([&] {
    need(cube, "cube");
    need(path, "path");
    if (profile) ihi::write_cube(cube->value, profile->value, path);
    else if (cube->profile) ihi::write_cube(cube->value, *cube->profile, path);
    else ihi::fail(ihi::Errc::invalid_argument, "no profile for the sidecar", "profile");
  });
}

ihi_status ihi_cube_shape(const ihi_cube* cube, size_t* height, size_t* width, size_t* channels,
                          ihi_axis* axis) {
  return guarded([&] {
    need(cube, "cube");
    if (height) *height = cube->value.height();
    if (width) *width = cube->value.width();
    if (channels) *channels = cube->value.channels();
    if (axis) *axis = from_axis(cube->value.axis());
  });
}

const double* ihi_cube_data(const ihi_cube* cube) {
  return cube ? cube->value.values().data() : nullptr;
}

ihi_status ihi_cube_copy_data(const ihi_cube* cube, double* out, size_t count) {
  return guarded([&] {
    need(cube, "cube");
    need(out, "out");
    if (count != cube->value.size())
      ihi::fail(ihi::Errc::shape_mismatch,
                "buffer holds " + std::to_string(count) + " values, cube has " +
                    std::to_string(cube->value.size()),
                "count");
    std::copy(cube->value.values().begin(), cube->value.values().end(), out);
  });
}

ihi_status ihi_cube_set_storage_bits(ihi_cube* cube, int bits) {
  return guarded([&] {
    need(cube, "cube");
    if (bits == 32) cube->value.set_storage(ihi::ScalarType::f32);
    else if (bits == 64) cube->value.set_storage(ihi::ScalarType::f64);
    else ihi::fail(ihi::Errc::invalid_argument, "expected 32 or 64", "bits");
  });
}

ihi_status ihi_cube_profile(const ihi_cube* cube, ihi_profile** out) {
  return guarded([&] {
    need(cube, "cube");
    need(out, "out");
    if (!cube->profile)
      ihi::fail(ihi::Errc::invalid_argument, "cube carries no profile", "profile");
    *out = new ihi_profile{*cube->profile};
  });
}

ihi_status ihi_cube_to_wavelength(const ihi_cube* cube, const ihi_profile* profile, ihi_cube** out) {
  return guarded([&] {
    need(cube, "cube");
    need(profile, "profile");
    need(out, "out");
    if (cube->value.axis() == ihi::AxisKind::wavelength) {
      *out = wrap(cube->value, profile->value);
      return;
    }
    *out = wrap(ihi::resample_wavenumber_to_hsi(cube->value, profile->value), profile->value);
  });
}

void ihi_cube_free(ihi_cube* cube) { delete cube; }

ihi_status ihi_params_read(const char* dir, ihi_params** out) {
  return guarded([&] {
    need(dir, "dir");
    need(out, "out");
    *out = new ihi_params{ihi::read_params(dir)};
  });
}

ihi_status ihi_params_write(const ihi_params* params, const char* dir) {
  return guarded([&] {
    need(params, "params");
    need(dir, "dir");
    ihi::write_params(params->value, dir);
  });
}

ihi_status ihi_params_synthetic(const ihi_profile* profile, const char* options_json,
                                ihi_params** out) {
  return guarded([&] {
    need(profile, "profile");
    need(out, "out");
    const auto o = instrument_options(parse_options(options_json));
    *out = new ihi_params{ihi::synthetic_instrument(profile->value, o).params};
  });
}

ihi_status ihi_params_identity(const ihi_profile* profile, ihi_params** out) {
  return guarded([&] {
    need(profile, "profile");
    need(out, "out");
    *out = new ihi_params{ihi::identity_params(profile->value)};
  });
}

ihi_status ihi_params_profile(const ihi_params* params, ihi_profile** out) {
  return guarded([&] {
    need(params, "params");
    need(out, "out");
    *out = new ihi_profile{params->value.profile};
  });
}

void ihi_params_free(ihi_params* params) { delete params; }

ihi_status ihi_simulate(const ihi_cube* hsi, const ihi_params* params, const char* options_json,
                        ihi_cube** interferogram, ihi_cube** gt_nu, ihi_cube** gt_hsi,
                        char** record_json) {
  return guarded([&] {
    need(hsi, "hsi");
    need(params, "params");
    const nlohmann::json o = parse_options(options_json);
    const auto& p = params->value;
    const ihi::TransformBasis basis = ihi::build_basis(p.profile);
    const ihi::RngHandle rng{o.value("seed", std::uint64_t{1}), o.value("stream", std::uint64_t{0})};
    ihi::SamplePair pair = ihi::synthesize_pair(
        hsi->value, p, basis, rng, o.value("target_rate", ihi::kDefaultTargetRate), noise_mode(o));
    if (interferogram) *interferogram = wrap(std::move(pair.interferogram), p.profile);
    if (gt_nu) *gt_nu = wrap(std::move(pair.gt_nu), p.profile);
    if (gt_hsi) *gt_hsi = wrap(std::move(pair.gt_hsi), p.profile);
    put_string(record_json, nlohmann::json{{"factor", pair.factor}}.dump());
  });
}

ihi_status ihi_make_calibration(const ihi_profile* profile, const char* options_json,
                                const char* capture_dir, const char* truth_params_dir) {
  return guarded([&] {
    need(profile, "profile");
    need(capture_dir, "capture_dir");
    const nlohmann::json o = parse_options(options_json);
    const auto inst = instrument_options(o.value("instrument", nlohmann::json::object()));
    const ihi::SyntheticInstrument truth = ihi::synthetic_instrument(profile->value, inst);
    ihi::CalibrationCaptureOptions capture;
    capture.height = o.value("height", capture.height);
    capture.seed = o.value("seed", capture.seed);
    if (o.contains("relative_rates"))
      capture.relative_rates = o.at("relative_rates").get<std::vector<double>>();
    if (o.contains("absolute_levels"))
      capture.absolute_levels = o.at("absolute_levels").get<std::vector<double>>();
    const ihi::TransformBasis basis = ihi::build_basis(profile->value);
    const ihi::CalibrationSet set = ihi::simulate_calibration(truth, basis, capture);
    ihi::write_calibration_set(set, profile->value, capture_dir);
    if (truth_params_dir) ihi::write_params(truth.params, truth_params_dir);
  });
}

ihi_status ihi_calibrate(const char* capture_dir, double e, const char* params_dir,
                         char** report_json) {
  return guarded([&] {
    need(capture_dir, "capture_dir");
    need(params_dir, "params_dir");
    ihi::InstrumentProfile profile;
    const ihi::CalibrationSet set = ihi::read_calibration_set(capture_dir, profile);
    const ihi::CalibrationResult r = ihi::calibrate_all(set, profile, e);
    ihi::write_params(r.params, params_dir);
    put_string(report_json, r.report.dump(1));
  });
}

ihi_status ihi_compare_params(const ihi_params* estimate, const ihi_params* truth, char** out_json) {
  return guarded([&] {
    need(estimate, "estimate");
    need(truth, "truth");
    need(out_json, "out_json");
    *out_json = dup_string(ihi::compare_params(estimate->value, truth->value).to_json().dump());
  });
}

ihi_status ihi_make_scenes(const ihi_profile* profile, const char* options_json, const char* out_dir) {
  return guarded([&] {
    need(profile, "profile");
    need(out_dir, "out_dir");
    const nlohmann::json o = parse_options(options_json);
    const auto count = o.value("count", std::size_t{3});
    const auto height = o.value("height", profile->value.width);
    const auto width = o.value("width", profile->value.width);
    const auto seed = o.value("seed", std::uint64_t{1});
    ihi::SceneOptions so;
    so.regions = o.value("regions", so.regions);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) ihi::fail(ihi::Errc::io, "cannot create directory: " + ec.message(), out_dir);
    for (std::size_t i = 0; i < count; ++i) {
      ihi::Cube scene = ihi::synthetic_scene(profile->value, height, width,
                                             ihi::derive_seed(seed, "scene", i), so);
      char name[32];
      std::snprintf(name, sizeof name, "scene_%04zu.ihic", i);
      ihi::write_cube(scene, profile->value, std::filesystem::path(out_dir) / name);
    }
  });
}

ihi_status ihi_make_dataset(const char* source_dir, const char* params_dir, const char* config_json,
                            const char* out_dir, char** manifest_json) {
  return guarded([&] {
    need(source_dir, "source_dir");
    need(params_dir, "params_dir");
    need(out_dir, "out_dir");
    const nlohmann::json o = parse_options(config_json);
    ihi::DatasetConfig c;
    c.patch_height = o.value("patch_height", c.patch_height);
    c.stride = o.value("stride", c.stride);
    c.per_image_cap = o.value("per_image_cap", c.per_image_cap);
    c.test_count = o.value("test_count", c.test_count);
    if (o.contains("test_sources")) c.test_sources = o.at("test_sources").get<std::vector<std::string>>();
    c.target_rate = o.value("target_rate", c.target_rate);
    c.master_seed = o.value("master_seed", c.master_seed);
    c.mode = noise_mode(o);
    const ihi::DegradationParams params = ihi::read_params(params_dir);
    const ihi::DatasetManifest m = ihi::make_dataset(source_dir, params, c, out_dir);
    put_string(manifest_json, m.to_json().dump(1));
  });
}

ihi_status ihi_verify_dataset(const char* dataset_dir, char** mismatches_json) {
  return guarded([&] {
    need(dataset_dir, "dataset_dir");
    need(mismatches_json, "mismatches_json");
    *mismatches_json = dup_string(nlohmann::json(ihi::verify_dataset(dataset_dir)).dump());
  });
}

ihi_status ihi_reconstructor_create(const ihi_params* params, ihi_reconstructor** out) {
  return guarded([&] {
    need(params, "params");
    need(out, "out");
    *out = new ihi_reconstructor{ihi::make_context(params->value)};
  });
}

ihi_status ihi_reconstruct(ihi_reconstructor* rec, const ihi_cube* interferogram,
                           const char* config_json, ihi_cube** out, char** info_json) {
  return guarded([&] {
    need(rec, "reconstructor");
    need(interferogram, "interferogram");
    need(out, "out");
    const nlohmann::json o = parse_options(config_json);
    const ihi::Method method = ihi::parse_method(o.value("method", std::string("fprime")));
    if (method == ihi::Method::passthrough)
      ihi::fail(ihi::Errc::invalid_argument, "passthrough is only available in evaluate", "method");
    nlohmann::json info = {{"method", ihi::method_name(method)}};
    const auto& profile = rec->ctx.params.profile;
    if (method == ihi::Method::unfold) {
      const ihi::UnfoldConfig c = unfold_config(o);
      ihi::UnfoldResult r = ihi::unfold(interferogram->value, rec->ctx, c);
      info["config"] = c.to_json();
      info["trace"] = r.trace;
      *out = wrap(std::move(r.hsi), profile);
    } else {
      *out = wrap(ihi::run_method(method, interferogram->value, rec->ctx, {}), profile);
    }
    put_string(info_json, info.dump());
  });
}

void ihi_reconstructor_free(ihi_reconstructor* rec) { delete rec; }

ihi_status ihi_metrics(const ihi_cube* x, const ihi_cube* ref, const char* options_json,
                       char** out_json) {
  return guarded([&] {
    need(x, "x");
    need(ref, "ref");
    need(out_json, "out_json");
    const nlohmann::json o = parse_options(options_json);
    const ihi::SsimOptions so = ssim_options(o);
    const ihi::PsnrValue p = ihi::psnr(x->value, ref->value, so.peak);
    nlohmann::json r = {{"psnr_db", p.infinite ? nlohmann::json(nullptr) : nlohmann::json(p.db)},
                        {"psnr_infinite", p.infinite}};
    if (x->value.height() >= so.window && x->value.width() >= so.window)
      r["ssim"] = ihi::ssim(x->value, ref->value, so);
    else
      r["ssim"] = nullptr;
    *out_json = dup_string(r.dump());
  });
}

ihi_status ihi_evaluate(const char* dataset_dir, const char* config_json, char** report_json,
                        char** table_text) {
  return guarded([&] {
    need(dataset_dir, "dataset_dir");
    const nlohmann::json o = parse_options(config_json);
    ihi::EvalConfig c;
    c.method = ihi::parse_method(o.value("method", std::string("fprime")));
    c.split = o.value("split", c.split);
    c.error_dir = o.value("error_dir", std::string());
    c.ssim = ssim_options(o.value("ssim", nlohmann::json::object()));
    c.unfold = unfold_config(o);
    const ihi::EvalReport r = ihi::evaluate_run(dataset_dir, c);
    put_string(report_json, r.to_json().dump(1));
    put_string(table_text, r.table());
  });
}

ihi_status ihi_selftest(const char* options_json, char** result_json, int* passed) {
  return guarded([&] {
    const nlohmann::json o = parse_options(options_json);
    ihi::SelftestOptions so;
    so.height = o.value("height", so.height);
    so.seed = o.value("seed", so.seed);
    const ihi::SelftestResult r = ihi::run_selftest(so);
    if (passed) *passed = r.ok() ? 1 : 0;
    put_string(result_json, r.to_json().dump(1));
  });
}

ihi_status ihi_serve_prior(const char* mode, const char* host, int port, size_t max_connections,
                           ihi_port_callback on_bound, void* user, size_t* errors) {
  return guarded([&] {
    need(mode, "mode");
    const ihi::ServeMode m = ihi::parse_serve_mode(mode);
    std::size_t n = 0;
    if (port < 0) {
      n = ihi::serve_bridge_stdio(m);
    } else {
      n = ihi::serve_bridge_tcp(host ? host : "127.0.0.1", port, m, max_connections, [&](int p) {
        if (on_bound) on_bound(p, user);
      });
    }
    if (errors) *errors = n;
  });
}

}  // extern "C"
