#include "sig/metrics/metrics.hpp"

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "sig/common/error.hpp"

namespace sig::metrics {

namespace {

void require_same_shape(const Image& x, const Image& y, const char* what) {
  if (!x.same_shape(y)) {
    throw_shape_error(std::string(what) + ": image shapes differ (" + std::to_string(x.height) + "x" +
                      std::to_string(x.width) + "x" + std::to_string(x.channels) + " vs " + std::to_string(y.height) +
                      "x" + std::to_string(y.width) + "x" + std::to_string(y.channels) + ")");
  }
}

std::array<double, kSsimWindow> make_taps() {
  std::array<double, kSsimWindow> t{};
  double total = 0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - kSsimWindow / 2;
    t[i] = std::exp(-d * d / (2 * kSsimSigma * kSsimSigma));
    total += t[i];
  }
  for (auto& v : t) v /= total;
  return t;
}

const std::array<double, kSsimWindow> kTaps = make_taps();

// Valid-mode separable Gaussian filter of one channel.
std::vector<double> filter(const std::vector<double>& img, int h, int w) {
  const int ow = w - kSsimWindow + 1, oh = h - kSsimWindow + 1;
  std::vector<double> rows(static_cast<std::size_t>(h) * ow, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0;
      for (int k = 0; k < kSsimWindow; ++k) acc += kTaps[k] * img[static_cast<std::size_t>(y) * w + x + k];
      rows[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow, 0.0);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0;
      for (int k = 0; k < kSsimWindow; ++k) acc += kTaps[k] * rows[static_cast<std::size_t>(y + k) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  return out;
}

}  // namespace

const double* ssim_taps() { return kTaps.data(); }

double psnr(const Image& x, const Image& y) {
  require_same_shape(x, y, "psnr");
  if (x.data.empty()) throw_shape_error("psnr: empty images");
  double se = 0;
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    const double d = static_cast<double>(x.data[i]) - y.data[i];
    se += d * d;
  }
  const double mse = se / static_cast<double>(x.data.size());
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, -10.0 * std::log10(mse));
}

double ssim(const Image& x, const Image& y) {
  require_same_shape(x, y, "ssim");
  if (x.height < kSsimWindow || x.width < kSsimWindow) {
    throw_config_error("ssim: images must be at least " + std::to_string(kSsimWindow) + "x" +
                       std::to_string(kSsimWindow));
  }
  const double c1 = (kSsimK1 * 1.0) * (kSsimK1 * 1.0);
  const double c2 = (kSsimK2 * 1.0) * (kSsimK2 * 1.0);
  const int h = x.height, w = x.width;
  const std::size_t n = static_cast<std::size_t>(h) * w;
  double total = 0;
  for (int c = 0; c < x.channels; ++c) {
    std::vector<double> a(n), b(n), aa(n), bb(n), ab(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = x.data[i * x.channels + c];
      b[i] = y.data[i * x.channels + c];
      aa[i] = a[i] * a[i];
      bb[i] = b[i] * b[i];
      ab[i] = a[i] * b[i];
    }
    const auto mu_a = filter(a, h, w), mu_b = filter(b, h, w);
    const auto e_aa = filter(aa, h, w), e_bb = filter(bb, h, w), e_ab = filter(ab, h, w);
    double sum = 0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
      const double va = e_aa[i] - mu_a[i] * mu_a[i];
      const double vb = e_bb[i] - mu_b[i] * mu_b[i];
      const double cov = e_ab[i] - mu_a[i] * mu_b[i];
      sum += ((2 * mu_a[i] * mu_b[i] + c1) * (2 * cov + c2)) /
             ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2));
    }
    total += sum / static_cast<double>(mu_a.size());
  }
  return total / x.channels;
}

}  // namespace sig::metrics
