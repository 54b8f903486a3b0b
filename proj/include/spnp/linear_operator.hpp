#pragma once

#include "spnp/image.hpp"
#include "spnp/kernel.hpp"

#include <complex>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

namespace spnp {

enum class OperatorKind { Identity, CirculantBlur, Mask };

std::string_view to_string(OperatorKind k);

/// Square measurement operator A acting on images, with its adjoint.
///
/// Immutable after construction; copies share the cached transfer spectrum,
/// so an operator can be read from several threads at once.
class LinearOperator {
 public:
  static LinearOperator identity();
  /// Periodic convolution with `kernel` on height x width planes (every
  /// channel blurred by the same kernel). The kernel is used as given.
  static LinearOperator circulant_blur(const BlurKernel& kernel, int height, int width);
  /// Pixel-wise multiplication by `mask` (any real weights, usually 0/1).
  static LinearOperator mask(const ImageTensor& mask);

  [[nodiscard]] OperatorKind kind() const { return kind_; }

  [[nodiscard]] ImageTensor forward(const ImageTensor& x) const;
  [[nodiscard]] ImageTensor adjoint(const ImageTensor& v) const;
  /// A^T A x.
  [[nodiscard]] ImageTensor normal(const ImageTensor& x) const;

  /// Throws DimensionError when x cannot be fed to this operator.
  void check_shape(const ImageTensor& x) const;

  /// True when (I + gamma A^T A)^{-1} can be applied exactly (diagonal in the
  /// pixel or Fourier basis). All current kinds qualify.
  [[nodiscard]] bool has_diagonal_normal() const { return true; }
  /// Solves (I + gamma A^T A) x = rhs exactly.
  [[nodiscard]] ImageTensor solve_shifted_normal(const ImageTensor& rhs, double gamma) const;

  /// Transfer function of the circulant case (row-major height x width).
  [[nodiscard]] const std::vector<std::complex<double>>& spectrum() const;
  [[nodiscard]] const std::optional<BlurKernel>& kernel() const { return kernel_; }

 private:
  LinearOperator() = default;

  [[nodiscard]] ImageTensor apply_spectrum(const ImageTensor& x, bool conjugate) const;

  OperatorKind kind_ = OperatorKind::Identity;
  int height_ = 0;
  int width_ = 0;
  std::optional<BlurKernel> kernel_;
  std::shared_ptr<const std::vector<std::complex<double>>> spectrum_;
  std::shared_ptr<const ImageTensor> mask_;
};

/// A x, periodic boundary for circulant blur.
ImageTensor apply_forward(const LinearOperator& op, const ImageTensor& x);
/// A^T v; for circulant blur this is correlation with the kernel.
ImageTensor apply_adjoint(const LinearOperator& op, const ImageTensor& v);

/// Direct spatial-domain periodic convolution, O(n k). Reference path for tests.
ImageTensor periodic_convolve(const BlurKernel& kernel, const ImageTensor& x);

}  // namespace spnp
