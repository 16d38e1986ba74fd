// ihi: command-line front end over the C interface.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ihi/ihi.h"

using nlohmann::json;

namespace {

enum Exit { kOk = 0, kUsage = 2, kIo = 3, kNumerical = 4, kSelftest = 5 };

struct Failure {
  int code;
  std::string message;
};

int exit_code(ihi_status s) {
  switch (s) {
    case IHI_OK: return kOk;
    case IHI_ERR_INVALID_ARGUMENT: return kUsage;
    case IHI_ERR_IO:
    case IHI_ERR_BAD_MAGIC:
    case IHI_ERR_VERSION_MISMATCH:
    case IHI_ERR_BAD_DTYPE:
    case IHI_ERR_BAD_NDIM:
    case IHI_ERR_DIM_OVERFLOW:
    case IHI_ERR_TRUNCATED_PAYLOAD:
    case IHI_ERR_TRAILING_BYTES: return kIo;
    default: return kNumerical;
  }
}

void check(ihi_status s) {
  if (s != IHI_OK)
    throw Failure{exit_code(s), std::string(ihi_status_name(s)) + ": " + ihi_last_error()};
}

// Owning wrappers for the opaque handles and returned strings.
struct CString {
  char* p = nullptr;
  ~CString() { ihi_string_free(p); }
  std::string str() const { return p ? p : ""; }
};
using Profile = std::unique_ptr<ihi_profile, decltype(&ihi_profile_free)>;
using CubePtr = std::unique_ptr<ihi_cube, decltype(&ihi_cube_free)>;
using Params = std::unique_ptr<ihi_params, decltype(&ihi_params_free)>;
using Reconstructor = std::unique_ptr<ihi_reconstructor, decltype(&ihi_reconstructor_free)>;

CubePtr read_cube(const std::string& path) {
  ihi_cube* c = nullptr;
  check(ihi_cube_read(path.c_str(), &c));
  return {c, ihi_cube_free};
}

Params read_params(const std::string& dir) {
  ihi_params* p = nullptr;
  check(ihi_params_read(dir.c_str(), &p));
  return {p, ihi_params_free};
}

Profile make_profile(const std::string& name, std::size_t height) {
  ihi_profile* p = nullptr;
  check(ihi_profile_create(name.c_str(), height, &p));
  return {p, ihi_profile_free};
}

Profile params_profile(const ihi_params* params) {
  ihi_profile* p = nullptr;
  check(ihi_params_profile(params, &p));
  return {p, ihi_profile_free};
}

int log_level() {
  const char* env = std::getenv("IHI_LOG");
  if (!env) return 1;
  const std::string v = env;
  if (v == "quiet" || v == "error" || v == "0") return 0;
  if (v == "debug" || v == "2") return 2;
  return 1;
}

void log(int level, const std::string& msg) {
  if (level <= log_level()) std::cerr << "[ihi] " << msg << '\n';
}

std::string digest_text(const std::string& text) {
  CString out;
  check(ihi_digest_text(text.c_str(), &out.p));
  return out.str();
}

std::string digest_path(const std::string& path) {
  CString out;
  check(ihi_digest_path(path.c_str(), &out.p));
  return out.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Failure{kIo, "cannot write " + path};
  out << text << '\n';
}

// Shared state of one invocation.
struct Run {
  bool json_output = false;
  std::string command;
  json flags = json::object();
  json inputs = json::object();
  json result = json::object();
  std::string human;

  void input(const std::string& name, const std::string& path) {
    inputs[name] = {{"path", path}, {"digest", digest_path(path)}};
  }

  std::string digest() const {
    return digest_text(json{{"command", command}, {"flags", flags}, {"inputs", inputs}}.dump());
  }

  void emit() const {
    const std::string d = digest();
    if (json_output) {
      json out = result;
      out["command"] = command;
      out["config_digest"] = d;
      std::cout << out.dump(1) << '\n';
    } else {
      std::cout << "config digest: " << d << '\n';
      if (!human.empty()) std::cout << human;
    }
  }
};

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// Reconstruction flags shared by `reconstruct` and `evaluate`.
struct MethodFlags {
  std::string method = "fprime";
  std::size_t stages = 5;
  double alpha = 1.0;
  std::string alpha_file;
  std::string prior = "tv";
  double tau = 0.0;
  std::string tv_lambda = "auto";
  std::size_t tv_iterations = 50;
  double tv_scale = 1.0;
  std::string prior_command;
  std::string prior_host = "127.0.0.1";
  int prior_port = 0;
  int prior_timeout_ms = 10000;
  std::string background = "dark+background";
  bool momentum = false;

  void add(CLI::App* app) {
    app->add_option("--method", method, "fprime | traditional | unfold")
        ->check(CLI::IsMember({"fprime", "traditional", "unfold", "passthrough"}))
        ->capture_default_str();
    app->add_option("--stages", stages, "unfolding stages")->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--alpha", alpha, "scalar step weight")->check(CLI::NonNegativeNumber)->capture_default_str();
    app->add_option("--alpha-file", alpha_file, "JSON array: per-column or per-(column, OPD) step weights")
        ->check(CLI::ExistingFile);
    app->add_option("--prior", prior, "identity | soft | tv | external")
        ->check(CLI::IsMember({"identity", "soft", "tv", "external"}))
        ->capture_default_str();
    app->add_option("--tau", tau, "soft-threshold level")->check(CLI::NonNegativeNumber);
    app->add_option("--tv-lambda", tv_lambda, "TV weight or 'auto'")->capture_default_str();
    app->add_option("--tv-iterations", tv_iterations, "TV dual iterations")->capture_default_str();
    app->add_option("--tv-scale", tv_scale, "auto TV weight per unit noise")->capture_default_str();
    app->add_option("--prior-command", prior_command, "external prior subprocess");
    app->add_option("--prior-host", prior_host, "external prior host")->capture_default_str();
    app->add_option("--prior-port", prior_port, "external prior TCP port");
    app->add_option("--prior-timeout-ms", prior_timeout_ms, "external prior timeout")->capture_default_str();
    app->add_option("--background", background, "none | dark | dark+background")
        ->check(CLI::IsMember({"none", "dark", "dark+background"}))
        ->capture_default_str();
    app->add_flag("--momentum", momentum, "add (x_k - x_{k-1}) to each step");
  }

  json prior_json() const {
    if (prior == "soft") return {{"id", "soft"}, {"tau", tau}};
    if (prior == "tv") {
      json j = {{"id", "tv"}, {"iterations", tv_iterations}, {"scale", tv_scale}};
      if (tv_lambda == "auto") j["lambda"] = "auto";
      else {
        try {
          j["lambda"] = std::stod(tv_lambda);
        } catch (...) {
          throw Failure{kUsage, "--tv-lambda expects a number or 'auto'"};
        }
      }
      return j;
    }
    if (prior == "external") {
      json j = {{"id", "external"}, {"timeout_ms", prior_timeout_ms}};
      if (!prior_command.empty()) j["command"] = prior_command;
      else if (prior_port > 0) {
        j["host"] = prior_host;
        j["port"] = prior_port;
      } else {
        throw Failure{kUsage, "--prior external needs --prior-command or --prior-port"};
      }
      return j;
    }
    return {{"id", "identity"}};
  }

  json to_json() const {
    json j = {{"method", method}, {"stages", stages}, {"prior", prior_json()},
              {"background", background}, {"momentum", momentum}};
    if (!alpha_file.empty()) {
      std::ifstream in(alpha_file);
      try {
        j["alpha"] = json::parse(in);
      } catch (const json::exception& e) {
        throw Failure{kUsage, "--alpha-file: " + std::string(e.what())};
      }
    } else {
      j["alpha"] = alpha;
    }
    return j;
  }
};

void cmd_simulate(Run& run, const std::string& input, const std::string& params_dir,
                  const std::string& output, const std::string& gt_nu, const std::string& gt_hsi,
                  std::uint64_t seed, std::uint64_t stream, double rate, bool deterministic) {
  run.input("input", input);
  run.input("params", params_dir);
  run.flags = {{"output", output}, {"gt_nu", gt_nu}, {"gt_hsi", gt_hsi}, {"seed", seed},
               {"stream", stream}, {"target_rate", rate}, {"deterministic", deterministic}};
  const auto hsi = read_cube(input);
  const auto params = read_params(params_dir);
  const auto profile = params_profile(params.get());
  const json opts = {{"seed", seed}, {"stream", stream}, {"target_rate", rate},
                     {"mode", deterministic ? "deterministic" : "stochastic"}};
  ihi_cube *interf = nullptr, *nu = nullptr, *wl = nullptr;
  CString record;
  check(ihi_simulate(hsi.get(), params.get(), opts.dump().c_str(), &interf, &nu, &wl, &record.p));
  CubePtr a(interf, ihi_cube_free), b(nu, ihi_cube_free), c(wl, ihi_cube_free);
  check(ihi_cube_write(a.get(), profile.get(), output.c_str()));
  if (!gt_nu.empty()) check(ihi_cube_write(b.get(), profile.get(), gt_nu.c_str()));
  if (!gt_hsi.empty()) check(ihi_cube_write(c.get(), profile.get(), gt_hsi.c_str()));
  const double factor = json::parse(record.str()).at("factor").get<double>();
  run.result = {{"output", output}, {"factor", factor}};
  run.human = "wrote " + output + " (photometric factor " + std::to_string(factor) + ")\n";
}

void cmd_calibrate(Run& run, const std::string& captures, const std::string& output, double e,
                   const std::string& report_path) {
  run.input("captures", captures);
  run.flags = {{"output", output}, {"e", e}, {"report", report_path}};
  CString report;
  check(ihi_calibrate(captures.c_str(), e, output.c_str(), &report.p));
  const json r = json::parse(report.str());
  if (!report_path.empty()) write_text(report_path, r.dump(1));
  run.result = {{"output", output}, {"report", r}};
  std::string table;
  for (const auto& [stage, v] : r.items())
    table += "  " + stage + ": invalid " + std::to_string(v.value("invalid_count", 0)) + "\n";
  run.human = "wrote parameters to " + output + "\n" + table;
}

void cmd_make_dataset(Run& run, const std::string& sources, const std::string& params_dir,
                      const std::string& output, const json& config) {
  run.input("sources", sources);
  run.input("params", params_dir);
  run.flags = config;
  run.flags["output"] = output;
  CString manifest;
  check(ihi_make_dataset(sources.c_str(), params_dir.c_str(), config.dump().c_str(), output.c_str(),
                         &manifest.p));
  const json m = json::parse(manifest.str());
  std::size_t train = 0, test = 0;
  for (const auto& s : m.at("samples")) (s.at("split") == "train" ? train : test)++;
  run.result = {{"output", output}, {"train", train}, {"test", test}};
  run.human = "wrote " + std::to_string(train) + " train and " + std::to_string(test) +
              " test samples to " + output + "\n";
}

void cmd_reconstruct(Run& run, const std::string& input, const std::string& params_dir,
                     const std::string& output, const MethodFlags& mf, const std::string& reference,
                     const std::string& trace_path) {
  run.input("input", input);
  run.input("params", params_dir);
  if (!reference.empty()) run.input("reference", reference);
  run.flags = mf.to_json();
  run.flags["output"] = output;
  if (mf.method == "passthrough") throw Failure{kUsage, "--method passthrough is evaluate-only"};

  const auto y = read_cube(input);
  const auto params = read_params(params_dir);
  const auto profile = params_profile(params.get());
  ihi_reconstructor* raw = nullptr;
  check(ihi_reconstructor_create(params.get(), &raw));
  Reconstructor rec(raw, ihi_reconstructor_free);
  const auto t0 = std::chrono::steady_clock::now();
  ihi_cube* out = nullptr;
  CString info;
  check(ihi_reconstruct(rec.get(), y.get(), mf.to_json().dump().c_str(), &out, &info.p));
  CubePtr x(out, ihi_cube_free);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!output.empty()) check(ihi_cube_write(x.get(), profile.get(), output.c_str()));
  const json i = json::parse(info.str());
  if (!trace_path.empty() && i.contains("trace")) write_text(trace_path, i.at("trace").dump());

  run.result = {{"output", output}, {"method", mf.method}, {"seconds", seconds}};
  if (i.contains("trace")) run.result["trace"] = i.at("trace");
  run.human = "method " + mf.method + ", " + fixed(seconds, 2) + " s\n";
  if (!reference.empty()) {
    const auto ref = read_cube(reference);
    ihi_cube* wl = nullptr;
    check(ihi_cube_to_wavelength(ref.get(), profile.get(), &wl));
    CubePtr ref_wl(wl, ihi_cube_free);
    CString metrics;
    check(ihi_metrics(x.get(), ref_wl.get(), nullptr, &metrics.p));
    const json m = json::parse(metrics.str());
    run.result["metrics"] = m;
    run.human += "PSNR " + (m.at("psnr_infinite").get<bool>() ? std::string("inf")
                                                              : fixed(m.at("psnr_db").get<double>(), 2)) +
                 " dB";
    if (!m.at("ssim").is_null()) run.human += ", SSIM " + fixed(m.at("ssim").get<double>(), 4);
    run.human += "\n";
  }
}

void cmd_evaluate(Run& run, const std::string& dataset, const MethodFlags& mf,
                  const std::string& split, const std::string& error_dir,
                  const std::string& report_path) {
  run.input("dataset", dataset);
  json config = mf.to_json();
  config["split"] = split;
  if (!error_dir.empty()) config["error_dir"] = error_dir;
  run.flags = config;
  run.flags["report"] = report_path;
  CString report, table;
  check(ihi_evaluate(dataset.c_str(), config.dump().c_str(), &report.p, &table.p));
  const json r = json::parse(report.str());
  if (!report_path.empty()) write_text(report_path, r.dump(1));
  run.result = r;
  run.human = table.str();
}

int cmd_selftest(Run& run, std::size_t height, std::uint64_t seed) {
  run.flags = {{"height", height}, {"seed", seed}};
  CString result;
  int passed = 0;
  const json opts = {{"height", height}, {"seed", seed}};
  check(ihi_selftest(opts.dump().c_str(), &result.p, &passed));
  const json r = json::parse(result.str());
  run.result = r;
  for (const auto& c : r.at("checks"))
    run.human += std::string(c.at("pass").get<bool>() ? "PASS " : "FAIL ") +
                 c.at("name").get<std::string>() + "  value " + std::to_string(c.at("value").get<double>()) +
                 "  limit " + std::to_string(c.at("threshold").get<double>()) + "\n";
  run.human += "selftest " + std::string(passed ? "passed" : "FAILED") + " in " +
               fixed(r.at("seconds").get<double>(), 1) + " s\n";
  return passed ? kOk : kSelftest;
}

void cmd_make_params(Run& run, const std::string& profile_name, std::size_t height,
                     const json& instrument, bool identity, const std::string& output) {
  run.flags = {{"profile", profile_name}, {"height", height}, {"instrument", instrument},
               {"identity", identity}, {"output", output}};
  const auto profile = make_profile(profile_name, height);
  ihi_params* p = nullptr;
  if (identity) check(ihi_params_identity(profile.get(), &p));
  else check(ihi_params_synthetic(profile.get(), instrument.dump().c_str(), &p));
  Params params(p, ihi_params_free);
  check(ihi_params_write(params.get(), output.c_str()));
  run.result = {{"output", output}};
  run.human = "wrote parameters to " + output + "\n";
}

void cmd_make_calibration(Run& run, const std::string& profile_name, const json& options,
                          const std::string& output, const std::string& truth) {
  run.flags = options;
  run.flags["profile"] = profile_name;
  run.flags["output"] = output;
  run.flags["truth"] = truth;
  const auto profile = make_profile(profile_name, 0);
  check(ihi_make_calibration(profile.get(), options.dump().c_str(), output.c_str(),
                             truth.empty() ? nullptr : truth.c_str()));
  run.result = {{"output", output}, {"truth", truth}};
  run.human = "wrote calibration captures to " + output + "\n";
}

void cmd_make_scenes(Run& run, const std::string& profile_name, const json& options,
                     const std::string& output) {
  run.flags = options;
  run.flags["profile"] = profile_name;
  run.flags["output"] = output;
  const auto profile = make_profile(profile_name, 0);
  check(ihi_make_scenes(profile.get(), options.dump().c_str(), output.c_str()));
  run.result = {{"output", output}};
  run.human = "wrote scenes to " + output + "\n";
}

void print_port(int port, void*) {
  std::fprintf(stderr, "listening on port %d\n", port);
  std::fflush(stderr);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interferometric hyperspectral imaging: simulation, calibration, reconstruction"};
  app.require_subcommand(1);
  Run run;
  int threads = 0;
  app.add_flag("--json", run.json_output, "machine-readable JSON on stdout");
  app.add_option("--threads", threads, "worker threads (default: IHI_THREADS or all cores)")
      ->check(CLI::NonNegativeNumber);

  // simulate
  auto* sim = app.add_subcommand("simulate", "wavelength HSI -> degraded interferogram");
  std::string sim_in, sim_params, sim_out, sim_nu, sim_hsi;
  std::uint64_t sim_seed = 1, sim_stream = 0;
  double sim_rate = 1e4;
  bool sim_det = false;
  sim->add_option("--input", sim_in, "wavelength cube (.ihic)")->required();
  sim->add_option("--params", sim_params, "parameter directory")->required();
  sim->add_option("--output", sim_out, "interferogram output (.ihic)")->required();
  sim->add_option("--gt-nu", sim_nu, "also write the wavenumber truth");
  sim->add_option("--gt-hsi", sim_hsi, "also write the scaled wavelength truth");
  sim->add_option("--seed", sim_seed)->capture_default_str();
  sim->add_option("--stream", sim_stream)->capture_default_str();
  sim->add_option("--target-rate", sim_rate, "mean in-band photoelectron rate")->capture_default_str();
  sim->add_flag("--deterministic", sim_det, "noiseless K*I_O + D");

  // calibrate
  auto* cal = app.add_subcommand("calibrate", "calibration captures -> parameter directory");
  std::string cal_in, cal_out, cal_report;
  double cal_e = 0.0;
  cal->add_option("--captures", cal_in, "capture directory")->required();
  cal->add_option("--output", cal_out, "parameter directory")->required();
  cal->add_option("--e", cal_e, "electronic gain log-std recorded in the parameters")->capture_default_str();
  cal->add_option("--report", cal_report, "write the per-stage JSON report here");

  // make-dataset
  auto* ds = app.add_subcommand("make-dataset", "source cubes + parameters -> paired dataset");
  std::string ds_src, ds_params, ds_out;
  std::size_t ds_patch = 0, ds_stride = 0, ds_cap = 0, ds_test = 1;
  std::vector<std::string> ds_test_sources;
  double ds_rate = 1e4;
  std::uint64_t ds_seed = 1;
  bool ds_det = false;
  ds->add_option("--sources", ds_src, "directory of wavelength cubes")->required();
  ds->add_option("--params", ds_params, "parameter directory")->required();
  ds->add_option("--output", ds_out, "dataset directory")->required();
  ds->add_option("--patch-height", ds_patch, "patch rows (default: W)");
  ds->add_option("--stride", ds_stride, "patch stride (default: patch height)");
  ds->add_option("--cap", ds_cap, "max patches per source (0: all)");
  ds->add_option("--test-count", ds_test, "held-out sources from the end of the sorted list")->capture_default_str();
  ds->add_option("--test-source", ds_test_sources, "held-out source stem (repeatable)");
  ds->add_option("--target-rate", ds_rate)->capture_default_str();
  ds->add_option("--seed", ds_seed, "master seed")->capture_default_str();
  ds->add_flag("--deterministic", ds_det, "noiseless interferograms");

  // reconstruct
  auto* rc = app.add_subcommand("reconstruct", "interferogram + parameters -> wavelength HSI");
  std::string rc_in, rc_params, rc_out, rc_ref, rc_trace;
  MethodFlags rc_m;
  rc->add_option("--input", rc_in, "interferogram (.ihic)")->required();
  rc->add_option("--params", rc_params, "parameter directory")->required();
  rc->add_option("--output", rc_out, "wavelength cube output (.ihic)");
  rc->add_option("--reference", rc_ref, "ground truth (wavelength or wavenumber) for PSNR/SSIM");
  rc->add_option("--trace", rc_trace, "write the unfolding fidelity trace (JSON)");
  rc_m.add(rc);

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "dataset + method -> PSNR/SSIM report");
  std::string ev_ds, ev_split = "test", ev_err, ev_report;
  MethodFlags ev_m;
  ev->add_option("--dataset", ev_ds, "dataset directory")->required();
  ev->add_option("--split", ev_split)->check(CLI::IsMember({"train", "test"}))->capture_default_str();
  ev->add_option("--error-dir", ev_err, "write per-scene absolute-error cubes here");
  ev->add_option("--report", ev_report, "write the JSON report here");
  ev_m.add(ev);

  // selftest
  auto* st = app.add_subcommand("selftest", "closed-loop calibration and round-trip checks");
  std::size_t st_height = 1024;
  std::uint64_t st_seed = 1;
  st->add_option("--height", st_height, "calibration capture rows")->capture_default_str();
  st->add_option("--seed", st_seed)->capture_default_str();

  // make-params
  auto* mp = app.add_subcommand("make-params", "synthetic instrument parameters");
  std::string mp_profile = "desk", mp_out;
  std::size_t mp_height = 0;
  bool mp_identity = false;
  std::uint64_t mp_seed = 1;
  double mp_gain = 1.5, mp_read = 5.0, mp_e = 0.1, mp_dark = 100.0, mp_phase = 0.15;
  mp->add_option("--profile", mp_profile)->check(CLI::IsMember({"desk", "standard"}))->capture_default_str();
  mp->add_option("--height", mp_height, "image rows (0: profile default)");
  mp->add_option("--output", mp_out, "parameter directory")->required();
  mp->add_option("--seed", mp_seed)->capture_default_str();
  mp->add_option("--gain", mp_gain)->capture_default_str();
  mp->add_option("--read-noise", mp_read)->capture_default_str();
  mp->add_option("--dark", mp_dark)->capture_default_str();
  mp->add_option("--e", mp_e)->capture_default_str();
  mp->add_option("--phase", mp_phase, "phase error (rad)")->capture_default_str();
  mp->add_flag("--identity", mp_identity, "ideal instrument (A=1, M=K=1, beta=D=sigma=0)");

  // make-calibration
  auto* mc = app.add_subcommand("make-calibration", "synthetic calibration captures");
  std::string mc_profile = "desk", mc_out, mc_truth;
  std::size_t mc_height = 1024;
  std::uint64_t mc_seed = 7, mc_inst = 1;
  double mc_read = 5.0;
  mc->add_option("--profile", mc_profile)->check(CLI::IsMember({"desk", "standard"}))->capture_default_str();
  mc->add_option("--output", mc_out, "capture directory")->required();
  mc->add_option("--truth", mc_truth, "write the true parameters here");
  mc->add_option("--height", mc_height, "capture rows")->capture_default_str();
  mc->add_option("--seed", mc_seed, "capture noise seed")->capture_default_str();
  mc->add_option("--instrument-seed", mc_inst)->capture_default_str();
  mc->add_option("--read-noise", mc_read)->capture_default_str();

  // make-scenes
  auto* ms = app.add_subcommand("make-scenes", "synthetic wavelength source scenes");
  std::string ms_profile = "desk", ms_out;
  std::size_t ms_count = 3, ms_height = 0, ms_width = 0;
  std::uint64_t ms_seed = 1;
  ms->add_option("--profile", ms_profile)->check(CLI::IsMember({"desk", "standard"}))->capture_default_str();
  ms->add_option("--output", ms_out, "directory")->required();
  ms->add_option("--count", ms_count)->capture_default_str();
  ms->add_option("--height", ms_height, "rows (default: W)");
  ms->add_option("--width", ms_width, "columns (default: W)");
  ms->add_option("--seed", ms_seed)->capture_default_str();

  // serve-prior
  auto* sp = app.add_subcommand("serve-prior", "reference prior-bridge server");
  std::string sp_mode = "echo", sp_host = "127.0.0.1";
  int sp_port = -1;
  std::size_t sp_max = 0;
  sp->add_option("--mode", sp_mode)->check(CLI::IsMember({"echo", "wrong-shape", "bad-magic"}))->capture_default_str();
  sp->add_option("--host", sp_host)->capture_default_str();
  sp->add_option("--port", sp_port, "TCP port; negative serves stdin/stdout")->capture_default_str();
  sp->add_option("--max-connections", sp_max, "stop after this many (0: forever)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }
  if (threads > 0) ihi_set_threads(static_cast<std::size_t>(threads));

  int code = kOk;
  try {
    CLI::App* sub = app.get_subcommands().front();
    run.command = sub->get_name();
    log(2, "threads " + std::to_string(ihi_threads()));
    if (sub == sim) {
      cmd_simulate(run, sim_in, sim_params, sim_out, sim_nu, sim_hsi, sim_seed, sim_stream, sim_rate,
                   sim_det);
    } else if (sub == cal) {
      cmd_calibrate(run, cal_in, cal_out, cal_e, cal_report);
    } else if (sub == ds) {
      json c = {{"test_count", ds_test}, {"target_rate", ds_rate}, {"master_seed", ds_seed},
                {"mode", ds_det ? "deterministic" : "stochastic"}, {"per_image_cap", ds_cap},
                {"patch_height", ds_patch}, {"stride", ds_stride}};
      if (!ds_test_sources.empty()) c["test_sources"] = ds_test_sources;
      cmd_make_dataset(run, ds_src, ds_params, ds_out, c);
    } else if (sub == rc) {
      cmd_reconstruct(run, rc_in, rc_params, rc_out, rc_m, rc_ref, rc_trace);
    } else if (sub == ev) {
      cmd_evaluate(run, ev_ds, ev_m, ev_split, ev_err, ev_report);
    } else if (sub == st) {
      code = cmd_selftest(run, st_height, st_seed);
    } else if (sub == mp) {
      const json inst = {{"seed", mp_seed}, {"gain", mp_gain}, {"read_noise", mp_read},
                         {"dark", mp_dark}, {"e", mp_e}, {"phase_rad", mp_phase}};
      cmd_make_params(run, mp_profile, mp_height, inst, mp_identity, mp_out);
    } else if (sub == mc) {
      const json o = {{"height", mc_height}, {"seed", mc_seed},
                      {"instrument", {{"seed", mc_inst}, {"read_noise", mc_read}}}};
      cmd_make_calibration(run, mc_profile, o, mc_out, mc_truth);
    } else if (sub == ms) {
      json o = {{"count", ms_count}, {"seed", ms_seed}};
      if (ms_height) o["height"] = ms_height;
      if (ms_width) o["width"] = ms_width;
      cmd_make_scenes(run, ms_profile, o, ms_out);
    } else if (sub == sp) {
      size_t errors = 0;
      check(ihi_serve_prior(sp_mode.c_str(), sp_host.c_str(), sp_port, sp_max, print_port, nullptr,
                            &errors));
      if (errors) log(1, "protocol errors: " + std::to_string(errors));
      return errors ? kNumerical : kOk;
    }
    run.emit();
  } catch (const Failure& f) {
    if (run.json_output)
      std::cout << json{{"command", run.command}, {"error", f.message}, {"exit_code", f.code}}.dump(1)
                << '\n';
    std::cerr << "error: " << f.message << '\n';
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumerical;
  }
  return code;
}
