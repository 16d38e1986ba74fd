#include "ihi/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "ihi/error.hpp"
#include "ihi/parallel.hpp"

namespace ihi {

namespace {

void check_pair(const Cube& x, const Cube& ref) {
  require(x.same_shape(ref), Errc::shape_mismatch,
          "cubes differ in shape: " + std::to_string(x.height()) + "x" + std::to_string(x.width()) +
              "x" + std::to_string(x.channels()) + " vs " + std::to_string(ref.height()) + "x" +
              std::to_string(ref.width()) + "x" + std::to_string(ref.channels()),
          "x");
  require(x.size() > 0, Errc::degenerate_axis, "empty cube", "x");
}

double default_peak(const Cube& ref, std::optional<double> peak) {
  const double p = peak ? *peak : *std::max_element(ref.values().begin(), ref.values().end());
  require(p > 0.0 && std::isfinite(p), Errc::invalid_argument, "peak must be positive", "peak");
  return p;
}

std::vector<double> gaussian_kernel(std::size_t n, double sigma) {
  std::vector<double> k(n);
  const double c = (static_cast<double>(n) - 1.0) / 2.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(i) - c;
    k[i] = std::exp(-0.5 * d * d / (sigma * sigma));
    sum += k[i];
  }
  for (double& v : k) v /= sum;
  return k;
}

// Separable valid-region filtering of an H x W plane.
std::vector<double> filter_valid(const std::vector<double>& img, std::size_t H, std::size_t W,
                                 const std::vector<double>& k) {
  const std::size_t n = k.size();
  const std::size_t oh = H - n + 1, ow = W - n + 1;
  std::vector<double> rows(H * ow, 0.0);
  for (std::size_t r = 0; r < H; ++r)
    for (std::size_t c = 0; c < ow; ++c) {
      double s = 0.0;
      for (std::size_t t = 0; t < n; ++t) s += k[t] * img[r * W + c + t];
      rows[r * ow + c] = s;
    }
  std::vector<double> out(oh * ow, 0.0);
  for (std::size_t r = 0; r < oh; ++r)
    for (std::size_t c = 0; c < ow; ++c) {
      double s = 0.0;
      for (std::size_t t = 0; t < n; ++t) s += k[t] * rows[(r + t) * ow + c];
      out[r * ow + c] = s;
    }
  return out;
}

}  // namespace

PsnrValue psnr(const Cube& x, const Cube& ref, std::optional<double> peak) {
  check_pair(x, ref);
  const double p = default_peak(ref, peak);
  const auto a = x.values();
  const auto b = ref.values();
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    sum += d * d;
  }
  const double mse = sum / static_cast<double>(a.size());
  if (mse == 0.0) return {INFINITY, true};
  return {10.0 * std::log10(p * p / mse), false};
}

double ssim(const Cube& x, const Cube& ref, const SsimOptions& o) {
  check_pair(x, ref);
  require(o.window >= 1, Errc::invalid_argument, "window must be positive", "window");
  require(x.height() >= o.window && x.width() >= o.window, Errc::degenerate_axis,
          "window " + std::to_string(o.window) + " is larger than the image", "window");
  const double range = default_peak(ref, o.peak);
  const double c1 = (o.k1 * range) * (o.k1 * range);
  const double c2 = (o.k2 * range) * (o.k2 * range);
  const auto kernel = gaussian_kernel(o.window, o.sigma);
  const std::size_t H = x.height(), W = x.width(), C = x.channels();

  std::vector<double> per_channel(C, 0.0);
  parallel_for(0, C, [&](std::size_t c) {
    std::vector<double> a(H * W), b(H * W), aa(H * W), bb(H * W), ab(H * W);
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t w = 0; w < W; ++w) {
        const std::size_t k = h * W + w;
        a[k] = x(h, w, c);
        b[k] = ref(h, w, c);
        aa[k] = a[k] * a[k];
        bb[k] = b[k] * b[k];
        ab[k] = a[k] * b[k];
      }
    const auto ma = filter_valid(a, H, W, kernel);
    const auto mb = filter_valid(b, H, W, kernel);
    const auto saa = filter_valid(aa, H, W, kernel);
    const auto sbb = filter_valid(bb, H, W, kernel);
    const auto sab = filter_valid(ab, H, W, kernel);
    double sum = 0.0;
    for (std::size_t k = 0; k < ma.size(); ++k) {
      const double va = saa[k] - ma[k] * ma[k];
      const double vb = sbb[k] - mb[k] * mb[k];
      const double cov = sab[k] - ma[k] * mb[k];
      sum += ((2.0 * ma[k] * mb[k] + c1) * (2.0 * cov + c2)) /
             ((ma[k] * ma[k] + mb[k] * mb[k] + c1) * (va + vb + c2));
    }
    per_channel[c] = sum / static_cast<double>(ma.size());
  });
  double total = 0.0;
  for (double v : per_channel) total += v;
  return total / static_cast<double>(C);
}

}  // namespace ihi
