#pragma once

#include "spnp/image.hpp"

namespace spnp {

inline constexpr double kPsnrCap = 99.0;

struct PsnrResult {
  double db = 0.0;
  bool capped = false;  ///< MSE was zero (or PSNR exceeded the cap)
};

/// 10 log10(max_val^2 / MSE), capped at 99 dB.
PsnrResult psnr_ex(const ImageTensor& x, const ImageTensor& ref, double max_val = 1.0);
double psnr(const ImageTensor& x, const ImageTensor& ref, double max_val = 1.0);

/// Mean SSIM over valid 11x11 window positions with Gaussian weights
/// (std 1.5), K1 = 0.01, K2 = 0.03, dynamic range 1, population moments.
/// Multi-channel images average the per-channel values.
double ssim(const ImageTensor& x, const ImageTensor& ref);

}  // namespace spnp
