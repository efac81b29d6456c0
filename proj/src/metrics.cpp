#include "interlat/metrics.hpp"

#include <cmath>
#include <vector>

#include "interlat/error.hpp"

namespace interlat {
namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    fail(ErrorKind::ShapeMismatch, std::string(op) + ": " + shape_str(a.shape()) + " vs " +
                                       shape_str(b.shape()));
}

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;

const std::vector<double>& gaussian_kernel() {
  static const std::vector<double> kernel = [] {
    std::vector<double> k(kWindow);
    const int half = kWindow / 2;
    double total = 0.0;
    for (int i = 0; i < kWindow; ++i) {
      const double d = i - half;
      k[i] = std::exp(-(d * d) / (2.0 * kSigma * kSigma));
      total += k[i];
    }
    for (double& v : k) v /= total;
    return k;
  }();
  return kernel;
}

// Windowed first and second moments at (cy, cx) with the window clipped to the
// plane and the remaining weights renormalized.
struct LocalStats {
  double mu_a, mu_b, var_a, var_b, cov;
};

LocalStats local_stats(const double* a, const double* b, size_t h, size_t w,
                       size_t stride, size_t cy, size_t cx) {
  const auto& kernel = gaussian_kernel();
  const int half = kWindow / 2;
  double weight_sum = 0.0, sa = 0.0, sb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
  for (int dy = -half; dy <= half; ++dy) {
    const long y = static_cast<long>(cy) + dy;
    if (y < 0 || y >= static_cast<long>(h)) continue;
    for (int dx = -half; dx <= half; ++dx) {
      const long x = static_cast<long>(cx) + dx;
      if (x < 0 || x >= static_cast<long>(w)) continue;
      const double wgt = kernel[dy + half] * kernel[dx + half];
      const double va = a[(y * w + x) * stride];
      const double vb = b[(y * w + x) * stride];
      weight_sum += wgt;
      sa += wgt * va;
      sb += wgt * vb;
      saa += wgt * va * va;
      sbb += wgt * vb * vb;
      sab += wgt * va * vb;
    }
  }
  LocalStats st;
  st.mu_a = sa / weight_sum;
  st.mu_b = sb / weight_sum;
  st.var_a = saa / weight_sum - st.mu_a * st.mu_a;
  st.var_b = sbb / weight_sum - st.mu_b * st.mu_b;
  st.cov = sab / weight_sum - st.mu_a * st.mu_b;
  return st;
}

}  // namespace

double psnr(const Tensor& a, const Tensor& b, double range, double cap_db) {
  check_same_shape(a, b, "psnr");
  if (!(range > 0.0)) fail(ErrorKind::ConfigInvalid, "psnr: range must be positive");
  const std::vector<double> va = a.to_vector();
  const std::vector<double> vb = b.to_vector();
  double mse = 0.0;
  for (size_t i = 0; i < va.size(); ++i) {
    const double d = va[i] - vb[i];
    mse += d * d;
  }
  mse /= static_cast<double>(va.size());
  if (mse <= 0.0) return cap_db;
  return std::min(cap_db, 10.0 * std::log10(range * range / mse));
}

double ssim(const Tensor& a, const Tensor& b, double range) {
  check_same_shape(a, b, "ssim");
  if (!(range > 0.0)) fail(ErrorKind::ConfigInvalid, "ssim: range must be positive");
  if (a.rank() != 4) fail(ErrorKind::DimMismatch, "ssim expects (f,h,w,c) tensors");
  const Shape& s = a.shape();
  const size_t f = s[0], h = s[1], w = s[2], c = s[3];
  const std::vector<double> va = a.to_vector();
  const std::vector<double> vb = b.to_vector();
  const double c1 = (0.01 * range) * (0.01 * range);
  const double c2 = (0.03 * range) * (0.03 * range);

  double total = 0.0;
  size_t count = 0;
  for (size_t fi = 0; fi < f; ++fi) {
    for (size_t ch = 0; ch < c; ++ch) {
      const double* pa = va.data() + fi * h * w * c + ch;
      const double* pb = vb.data() + fi * h * w * c + ch;
      for (size_t y = 0; y < h; ++y) {
        for (size_t x = 0; x < w; ++x) {
          const LocalStats st = local_stats(pa, pb, h, w, c, y, x);
          const double num = (2.0 * st.mu_a * st.mu_b + c1) * (2.0 * st.cov + c2);
          const double den =
              (st.mu_a * st.mu_a + st.mu_b * st.mu_b + c1) * (st.var_a + st.var_b + c2);
          total += num / den;
          ++count;
        }
      }
    }
  }
  return total / static_cast<double>(count);
}

double l1_distance(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "l1_distance");
  const std::vector<double> va = a.to_vector();
  const std::vector<double> vb = b.to_vector();
  double total = 0.0;
  for (size_t i = 0; i < va.size(); ++i) total += std::fabs(va[i] - vb[i]);
  return total / static_cast<double>(va.size());
}

}  // namespace interlat
