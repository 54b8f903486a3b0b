#include "spnp/metrics.hpp"

#include "spnp/errors.hpp"

#include <array>
#include <cmath>

namespace spnp {

PsnrResult psnr_ex(const ImageTensor& x, const ImageTensor& ref, double max_val) {
  require_same_shape(x, ref, "psnr");
  if (!(max_val > 0.0)) throw ParameterError("psnr max_val must be positive");
  const double mse = (x.data() - ref.data()).squaredNorm() / static_cast<double>(x.size());
  if (mse == 0.0) return {kPsnrCap, true};
  const double db = 10.0 * std::log10(max_val * max_val / mse);
  if (db > kPsnrCap) return {kPsnrCap, true};
  return {db, false};
}

double psnr(const ImageTensor& x, const ImageTensor& ref, double max_val) { return psnr_ex(x, ref, max_val).db; }

namespace {

constexpr int kWin = 11;

std::array<double, kWin> gaussian_window() {
  std::array<double, kWin> w{};
  double s = 0.0;
  for (int i = 0; i < kWin; ++i) {
    const double d = i - kWin / 2;
    w[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
    s += w[i];
  }
  for (auto& v : w) v /= s;
  return w;
}

// Separable valid-mode filtering of an H x W plane.
Mat filter_valid(const Mat& a, const std::array<double, kWin>& w) {
  const Eigen::Index H = a.rows();
  const Eigen::Index W = a.cols();
  Mat rows(H, W - kWin + 1);
  for (Eigen::Index i = 0; i < H; ++i) {
    for (Eigen::Index j = 0; j + kWin <= W; ++j) {
      double s = 0.0;
      for (int k = 0; k < kWin; ++k) s += w[k] * a(i, j + k);
      rows(i, j) = s;
    }
  }
  Mat out(H - kWin + 1, W - kWin + 1);
  for (Eigen::Index i = 0; i + kWin <= H; ++i) {
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
      double s = 0.0;
      for (int k = 0; k < kWin; ++k) s += w[k] * rows(i + k, j);
      out(i, j) = s;
    }
  }
  return out;
}

}  // namespace

double ssim(const ImageTensor& x, const ImageTensor& ref) {
  require_same_shape(x, ref, "ssim");
  if (x.height() < kWin || x.width() < kWin) throw ParameterError("ssim needs images of at least 11x11 pixels");
  const auto w = gaussian_window();
  const double C1 = 0.01 * 0.01;
  const double C2 = 0.03 * 0.03;
  const int H = x.height();
  const int W = x.width();
  double total = 0.0;
  for (int c = 0; c < x.channels(); ++c) {
    Mat a(H, W);
    Mat b(H, W);
    for (int i = 0; i < H; ++i) {
      for (int j = 0; j < W; ++j) {
        a(i, j) = x(c, i, j);
        b(i, j) = ref(c, i, j);
      }
    }
    const Mat ma = filter_valid(a, w);
    const Mat mb = filter_valid(b, w);
    const Mat aa = filter_valid(a.cwiseProduct(a), w);
    const Mat bb = filter_valid(b.cwiseProduct(b), w);
    const Mat ab = filter_valid(a.cwiseProduct(b), w);
    const auto va = aa.array() - ma.array() * ma.array();
    const auto vb = bb.array() - mb.array() * mb.array();
    const auto cov = ab.array() - ma.array() * mb.array();
    const auto num = (2.0 * ma.array() * mb.array() + C1) * (2.0 * cov + C2);
    const auto den = (ma.array() * ma.array() + mb.array() * mb.array() + C1) * (va + vb + C2);
    total += (num / den).mean();
  }
  return total / x.channels();
}

}  // namespace spnp
