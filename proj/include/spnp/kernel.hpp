#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <string>

namespace spnp {

/// Point-spread function with odd extents; the center tap sits at (kh/2, kw/2).
struct BlurKernel {
  int kh = 1;
  int kw = 1;
  Eigen::MatrixXd weights = Eigen::MatrixXd::Ones(1, 1);

  BlurKernel() = default;
  BlurKernel(int kh, int kw, Eigen::MatrixXd weights);

  [[nodiscard]] double sum() const { return weights.sum(); }
  /// Rescaled copy summing to one. Throws NumericError for a zero-sum kernel.
  [[nodiscard]] BlurKernel normalized() const;
  [[nodiscard]] bool is_symmetric(double tol = 0.0) const;

  static BlurKernel delta();
  static BlurKernel box(int size);
  static BlurKernel gaussian(int size, double std);
  /// Anti-aliased line segment through the center, a crude motion blur.
  static BlurKernel line(int size, double length, double angle_deg);
};

/// Reads "kh kw" followed by kh*kw whitespace-separated reals (row-major).
/// The kernel is normalized to unit sum; a warning is logged when the raw
/// sum differs from one by more than 1e-6.
BlurKernel load_kernel(const std::filesystem::path& path);
void save_kernel(const BlurKernel& k, const std::filesystem::path& path);

/// Same text format, parsed from memory. No normalization.
BlurKernel parse_kernel_text(const std::string& text);

}  // namespace spnp
