#include "ihi/params.hpp"

#include <fstream>

#include "ihi/error.hpp"
#include "ihi/io.hpp"

namespace ihi {

namespace fs = std::filesystem;

namespace {

void check_map(const Map2& m, Eigen::Index rows, Eigen::Index cols, const char* name) {
  require(m.rows() == rows && m.cols() == cols, Errc::shape_mismatch,
          "expected " + std::to_string(rows) + "x" + std::to_string(cols) + ", got " +
              std::to_string(m.rows()) + "x" + std::to_string(m.cols()),
          name);
  require(m.allFinite(), Errc::non_finite, "contains NaN or Inf", name);
}

}  // namespace

void DegradationParams::validate_shapes() const {
  const auto W = static_cast<Eigen::Index>(profile.width);
  const auto L = static_cast<Eigen::Index>(profile.opd_samples());
  const auto N = static_cast<Eigen::Index>(profile.wavenumbers());
  require(A.rows() == W && A.cols() == N, Errc::shape_mismatch,
          "expected " + std::to_string(W) + "x" + std::to_string(N), "A");
  require(A.allFinite(), Errc::non_finite, "contains NaN or Inf", "A");
  check_map(beta, W, L, "beta");
  check_map(M, W, L, "M");
  check_map(K, W, L, "K");
  check_map(D, W, L, "D");
  check_map(sigma_read, W, L, "sigma_read");
  require(std::isfinite(e), Errc::non_finite, "not finite", "e");
}

void DegradationParams::validate() const {
  validate_shapes();
  require((K.array() > 0.0).all(), Errc::invalid_argument, "must be strictly positive", "K");
  require((sigma_read.array() >= 0.0).all(), Errc::invalid_argument, "must be non-negative",
          "sigma_read");
  require(e >= 0.0, Errc::invalid_argument, "must be non-negative", "e");
  const auto band = profile.band_mask();
  for (Eigen::Index w = 0; w < A.rows(); ++w)
    for (Eigen::Index j = 0; j < A.cols(); ++j)
      if (band[static_cast<std::size_t>(j)] && std::abs(A(w, j)) == 0.0)
        fail(Errc::invalid_argument,
             "|A| is zero in band at column " + std::to_string(w) + ", bin " + std::to_string(j),
             "A");
}

void write_params(const DegradationParams& params, const fs::path& dir) {
  params.validate_shapes();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(Errc::io, "cannot create directory: " + ec.message(), dir.string());

  write_map(dir / "A_real.ihic", params.A.real());
  write_map(dir / "A_imag.ihic", params.A.imag());
  write_map(dir / "beta.ihic", params.beta);
  write_map(dir / "M.ihic", params.M);
  write_map(dir / "K.ihic", params.K);
  write_map(dir / "D.ihic", params.D);
  write_map(dir / "sigma_read.ihic", params.sigma_read);

  nlohmann::json j;
  j["version"] = kParamsVersion;
  j["e"] = params.e;
  j["profile"] = profile_to_json(params.profile);
  std::ofstream out(dir / "params.json", std::ios::trunc);
  if (!out) fail(Errc::io, "cannot write", (dir / "params.json").string());
  out << j.dump(1) << '\n';
}

DegradationParams read_params(const fs::path& dir) {
  if (!fs::is_directory(dir)) fail(Errc::io, "parameter directory not found", dir.string());
  const fs::path meta = dir / "params.json";
  std::ifstream in(meta);
  if (!in) fail(Errc::io, "cannot open", meta.string());

  DegradationParams p;
  try {
    nlohmann::json j;
    in >> j;
    const int version = j.at("version").get<int>();
    require(version == kParamsVersion, Errc::version_mismatch,
            "unsupported params version " + std::to_string(version), "version");
    p.e = j.at("e").get<double>();
    p.profile = profile_from_json(j.at("profile"));
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::io, std::string("malformed params.json: ") + e.what(), meta.string());
  }

  const Map2 re = read_map(dir / "A_real.ihic");
  const Map2 im = read_map(dir / "A_imag.ihic");
  require(re.rows() == im.rows() && re.cols() == im.cols(), Errc::shape_mismatch,
          "A_real and A_imag differ in shape", "A");
  p.A = ComplexMap2(re.rows(), re.cols());
  p.A.real() = re;
  p.A.imag() = im;
  p.beta = read_map(dir / "beta.ihic");
  p.M = read_map(dir / "M.ihic");
  p.K = read_map(dir / "K.ihic");
  p.D = read_map(dir / "D.ihic");
  p.sigma_read = read_map(dir / "sigma_read.ihic");
  p.validate_shapes();
  return p;
}

}  // namespace ihi
