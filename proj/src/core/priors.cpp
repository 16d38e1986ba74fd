#include "ihi/priors.hpp"

#include <algorithm>
#include <cmath>

#include "ihi/bridge.hpp"
#include "ihi/error.hpp"
#include "ihi/parallel.hpp"

namespace ihi {

namespace {

constexpr double kTvStep = 0.125;

double shrink(double v, double tau) {
  const double a = std::abs(v) - tau;
  return a > 0.0 ? std::copysign(a, v) : 0.0;
}

double median_inplace(std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    m = 0.5 * (m + lo);
  }
  return m;
}

// Chambolle projection on one H x W plane, in place.
void tv_plane(std::vector<double>& f, std::size_t H, std::size_t W, double lambda,
              std::size_t iterations) {
  const std::size_t n = H * W;
  std::vector<double> px(n, 0.0), py(n, 0.0), div(n, 0.0), g(n);
  auto at = [W](std::size_t r, std::size_t c) { return r * W + c; };
  auto divergence = [&] {
    for (std::size_t r = 0; r < H; ++r)
      for (std::size_t c = 0; c < W; ++c) {
        const std::size_t k = at(r, c);
        double d = 0.0;
        if (r + 1 < H) d += py[k];
        if (r > 0) d -= py[at(r - 1, c)];
        if (c + 1 < W) d += px[k];
        if (c > 0) d -= px[at(r, c - 1)];
        div[k] = d;
      }
  };
  for (std::size_t it = 0; it < iterations; ++it) {
    divergence();
    for (std::size_t k = 0; k < n; ++k) g[k] = div[k] - f[k] / lambda;
    for (std::size_t r = 0; r < H; ++r)
      for (std::size_t c = 0; c < W; ++c) {
        const std::size_t k = at(r, c);
        const double gx = c + 1 < W ? g[at(r, c + 1)] - g[k] : 0.0;
        const double gy = r + 1 < H ? g[at(r + 1, c)] - g[k] : 0.0;
        const double norm = 1.0 + kTvStep * std::hypot(gx, gy);
        px[k] = (px[k] + kTvStep * gx) / norm;
        py[k] = (py[k] + kTvStep * gy) / norm;
      }
  }
  divergence();
  for (std::size_t k = 0; k < n; ++k) f[k] -= lambda * div[k];
}

}  // namespace

Cube soft_threshold(const Cube& x, double tau) {
  require(tau >= 0.0 && std::isfinite(tau), Errc::invalid_argument, "must be finite and >= 0",
          "tau");
  if (tau == 0.0) return x;
  Cube out = x;
  const std::size_t C = x.channels();
  if (C < 2) return out;
  parallel_for(0, x.height(), [&](std::size_t h) {
    std::vector<double> d(C - 1);
    for (std::size_t w = 0; w < x.width(); ++w) {
      const auto in = x.pixel(h, w);
      auto px = out.pixel(h, w);
      double mean_in = 0.0;
      for (double v : in) mean_in += v;
      mean_in /= static_cast<double>(C);
      for (std::size_t j = 0; j + 1 < C; ++j) d[j] = shrink(in[j + 1] - in[j], tau);
      px[0] = 0.0;
      for (std::size_t j = 1; j < C; ++j) px[j] = px[j - 1] + d[j - 1];
      double mean_out = 0.0;
      for (double v : px) mean_out += v;
      mean_out /= static_cast<double>(C);
      for (double& v : px) v += mean_in - mean_out;
    }
  });
  return out;
}

SoftThresholdPrior::SoftThresholdPrior(double tau) : tau_(tau) {
  require(tau >= 0.0 && std::isfinite(tau), Errc::invalid_argument, "must be finite and >= 0",
          "tau");
}

std::vector<double> channel_noise_mad(const Cube& x) {
  const std::size_t C = x.channels();
  std::vector<double> out(C, 0.0);
  if (x.height() < 2) return out;
  parallel_for(0, C, [&](std::size_t c) {
    std::vector<double> d;
    d.reserve((x.height() - 1) * x.width());
    for (std::size_t h = 0; h + 1 < x.height(); ++h)
      for (std::size_t w = 0; w < x.width(); ++w) d.push_back(std::abs(x(h + 1, w, c) - x(h, w, c)));
    out[c] = 1.4826 * median_inplace(d) / std::sqrt(2.0);
  });
  return out;
}

Cube tv_denoise(const Cube& x, double lambda, std::size_t iterations) {
  require(lambda >= 0.0 && std::isfinite(lambda), Errc::invalid_argument,
          "must be finite and >= 0", "lambda");
  if (lambda == 0.0 || iterations == 0) return x;
  std::vector<double> lambdas(x.channels(), lambda);
  Cube out = x;
  const std::size_t H = x.height(), W = x.width();
  parallel_for(0, x.channels(), [&](std::size_t c) {
    std::vector<double> plane(H * W);
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t w = 0; w < W; ++w) plane[h * W + w] = x(h, w, c);
    tv_plane(plane, H, W, lambdas[c], iterations);
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t w = 0; w < W; ++w) out(h, w, c) = plane[h * W + w];
  });
  return out;
}

TvPrior::TvPrior(double lambda, std::size_t iterations, double scale)
    : lambda_(lambda), iterations_(iterations), scale_(scale) {
  require(std::isfinite(lambda), Errc::invalid_argument, "must be finite", "lambda");
  require(scale >= 0.0 && std::isfinite(scale), Errc::invalid_argument, "must be finite and >= 0",
          "scale");
}

Cube TvPrior::denoise(const Cube& x, std::size_t) {
  if (lambda_ >= 0.0) return tv_denoise(x, lambda_, iterations_);
  const std::vector<double> sigma = channel_noise_mad(x);
  Cube out = x;
  const std::size_t H = x.height(), W = x.width();
  parallel_for(0, x.channels(), [&](std::size_t c) {
    const double lambda = scale_ * sigma[c];
    if (lambda <= 0.0 || iterations_ == 0) return;
    std::vector<double> plane(H * W);
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t w = 0; w < W; ++w) plane[h * W + w] = x(h, w, c);
    tv_plane(plane, H, W, lambda, iterations_);
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t w = 0; w < W; ++w) out(h, w, c) = plane[h * W + w];
  });
  return out;
}

nlohmann::json TvPrior::describe() const {
  nlohmann::json j = {{"id", id()}, {"iterations", iterations_}, {"scale", scale_}};
  if (lambda_ < 0.0) j["lambda"] = "auto";
  else j["lambda"] = lambda_;
  return j;
}

std::unique_ptr<Prior> make_prior(const nlohmann::json& config) {
  try {
    const std::string id = config.value("id", std::string("identity"));
    if (id == "identity") return std::make_unique<IdentityPrior>();
    if (id == "soft") return std::make_unique<SoftThresholdPrior>(config.value("tau", 0.0));
    if (id == "tv") {
      double lambda = -1.0;
      if (config.contains("lambda") && !config.at("lambda").is_string())
        lambda = config.at("lambda").get<double>();
      else if (config.contains("lambda") && config.at("lambda").get<std::string>() != "auto")
        fail(Errc::invalid_argument, "expected a number or \"auto\"", "lambda");
      return std::make_unique<TvPrior>(lambda, config.value("iterations", std::size_t{50}),
                                       config.value("scale", 1.0));
    }
    if (id == "external") return make_external_prior(config);
    fail(Errc::invalid_argument, "unknown prior '" + id + "'", "prior");
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::invalid_argument, std::string("bad prior config: ") + e.what(), "prior");
  }
}

}  // namespace ihi
