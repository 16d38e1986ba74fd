#include "ihi/evaluate.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "ihi/digest.hpp"
#include "ihi/error.hpp"
#include "ihi/io.hpp"
#include "ihi/synthesize.hpp"

namespace ihi {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

nlohmann::json psnr_json(const PsnrValue& p) {
  return p.infinite ? nlohmann::json(nullptr) : nlohmann::json(p.db);
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

const char* method_name(Method m) {
  switch (m) {
    case Method::passthrough: return "passthrough";
    case Method::fprime: return "fprime";
    case Method::traditional: return "traditional";
    case Method::unfold: return "unfold";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  if (name == "passthrough" || name == "gt") return Method::passthrough;
  if (name == "fprime" || name == "direct") return Method::fprime;
  if (name == "traditional") return Method::traditional;
  if (name == "unfold") return Method::unfold;
  fail(Errc::invalid_argument, "unknown method '" + name + "'", "method");
}

Cube run_method(Method method, const Cube& y, const ReconstructContext& ctx,
                const UnfoldConfig& unfold_config) {
  switch (method) {
    case Method::fprime: return reconstruct_direct(y, ctx);
    case Method::traditional: return reconstruct_traditional(y, ctx);
    case Method::unfold: return unfold(y, ctx, unfold_config).hsi;
    case Method::passthrough: break;
  }
  fail(Errc::invalid_argument, "passthrough needs the ground truth", "method");
}

nlohmann::json EvalConfig::to_json() const {
  nlohmann::json j = {{"method", method_name(method)},
                      {"split", split},
                      {"ssim",
                       {{"window", ssim.window},
                        {"sigma", ssim.sigma},
                        {"k1", ssim.k1},
                        {"k2", ssim.k2},
                        {"peak", "max(ref)"}}},
                      {"psnr_peak", "max(ref)"},
                      {"error_cubes", !error_dir.empty()}};
  if (method == Method::unfold) j["unfold"] = unfold.to_json();
  return j;
}

PsnrValue mean_psnr(const std::vector<SceneScore>& scenes) {
  if (scenes.empty()) return {};
  double sum = 0.0;
  for (const auto& s : scenes) {
    if (s.psnr.infinite) return {INFINITY, true};
    sum += s.psnr.db;
  }
  return {sum / static_cast<double>(scenes.size()), false};
}

std::string EvalReport::digest() const {
  Fnv1a h;
  h.update(method);
  h.update(config_digest);
  for (const auto& s : scenes) {
    h.update(s.id);
    h.update(psnr_json(s.psnr).dump());
    h.update(nlohmann::json(s.ssim).dump());
  }
  return h.hex();
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& s : scenes)
    rows.push_back({{"id", s.id},
                    {"psnr_db", psnr_json(s.psnr)},
                    {"psnr_infinite", s.psnr.infinite},
                    {"ssim", s.ssim},
                    {"seconds", s.seconds}});
  return {{"method", method},
          {"config_digest", config_digest},
          {"report_digest", digest()},
          {"config", config},
          {"scenes", rows},
          {"mean_psnr_db", psnr_json(mean_psnr)},
          {"mean_psnr_infinite", mean_psnr.infinite},
          {"mean_ssim", mean_ssim},
          {"runtime_seconds", runtime_seconds}};
}

std::string EvalReport::table() const {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-16s %10s %8s %8s\n", "scene", "PSNR(dB)", "SSIM", "time(s)");
  out << line;
  auto psnr_text = [](const PsnrValue& p) { return p.infinite ? std::string("inf") : fixed(p.db, 2); };
  for (const auto& s : scenes) {
    std::snprintf(line, sizeof line, "%-16s %10s %8s %8s\n", s.id.c_str(), psnr_text(s.psnr).c_str(),
                  fixed(s.ssim, 4).c_str(), fixed(s.seconds, 2).c_str());
    out << line;
  }
  std::snprintf(line, sizeof line, "%-16s %10s %8s %8s\n", "mean", psnr_text(mean_psnr).c_str(),
                fixed(mean_ssim, 4).c_str(), fixed(runtime_seconds, 2).c_str());
  out << line;
  return out.str();
}

EvalReport evaluate_run(const fs::path& dataset_dir, const EvalConfig& config) {
  const auto t0 = Clock::now();
  const DatasetManifest manifest = read_manifest(dataset_dir);
  const fs::path params_dir = dataset_dir / manifest.params_dir;
  const DegradationParams params = read_params(params_dir);
  const ReconstructContext ctx = make_context(params);

  EvalReport report;
  report.method = method_name(config.method);
  report.config = config.to_json();
  {
    Fnv1a h;
    h.update(report.config.dump());
    h.update(directory_digest(params_dir));
    h.update(manifest.to_json().dump());
    report.config_digest = h.hex();
  }
  if (!config.error_dir.empty()) {
    std::error_code ec;
    fs::create_directories(config.error_dir, ec);
    if (ec) fail(Errc::io, "cannot create directory: " + ec.message(), config.error_dir.string());
  }

  for (const auto& sample : manifest.samples) {
    if (sample.split != config.split) continue;
    const auto ts = Clock::now();
    try {
      const SampleFiles files = sample_files(dataset_dir, sample);
      const Cube truth = unscale(read_cube(files.gt_hsi), sample.factor);
      Cube estimate;
      if (config.method == Method::passthrough) {
        estimate = truth;
      } else {
        const Cube y = read_cube(files.interf);
        estimate = unscale(run_method(config.method, y, ctx, config.unfold), sample.factor);
      }
      SceneScore score;
      score.id = sample.id;
      score.psnr = psnr(estimate, truth);
      SsimOptions so = config.ssim;
      score.ssim = ssim(estimate, truth, so);
      score.seconds = seconds_since(ts);
      if (!config.error_dir.empty()) {
        Cube err = estimate;
        auto ev = err.values();
        const auto tv = truth.values();
        for (std::size_t k = 0; k < ev.size(); ++k) ev[k] = std::abs(ev[k] - tv[k]);
        std::string name = sample.id;
        for (char& c : name)
          if (c == '/') c = '_';
        write_cube(err, params.profile, config.error_dir / (name + ".abs_error.ihic"));
      }
      report.scenes.push_back(score);
    } catch (const Error& e) {
      fail(e.code(), e.what(), sample.id);
    }
  }
  require(!report.scenes.empty(), Errc::invalid_argument,
          "dataset has no samples in split '" + config.split + "'", "split");

  report.mean_psnr = mean_psnr(report.scenes);
  double s = 0.0;
  for (const auto& x : report.scenes) s += x.ssim;
  report.mean_ssim = s / static_cast<double>(report.scenes.size());
  report.runtime_seconds = seconds_since(t0);
  return report;
}

}  // namespace ihi
