#pragma once

#include "spnp/image.hpp"
#include "spnp/linear_operator.hpp"

#include <functional>

namespace spnp {

/// g(x) = 1/2 |y - A x|^2.
class QuadraticDataTerm {
 public:
  QuadraticDataTerm(LinearOperator op, ImageTensor y);

  [[nodiscard]] const LinearOperator& op() const { return op_; }
  [[nodiscard]] const ImageTensor& y() const { return y_; }
  /// A^T y, computed once.
  [[nodiscard]] const ImageTensor& adjoint_y() const { return aty_; }

  [[nodiscard]] double value(const ImageTensor& x) const;

 private:
  LinearOperator op_;
  ImageTensor y_;
  ImageTensor aty_;
};

enum class ProxMethod { Auto, Direct, ConjugateGradient };

struct ProxOptions {
  ProxMethod method = ProxMethod::Auto;
  double cg_tolerance = 1e-10;  ///< on |r| / |b|
  int cg_max_iterations = 1000;
};

/// argmin_x 1/2 |x - z|^2 + gamma g(x), i.e. (I + gamma A^T A) x = z + gamma A^T y.
/// Auto uses the exact diagonal solve when the operator offers one.
ImageTensor prox_quadratic(const QuadraticDataTerm& dt, const ImageTensor& z, double gamma,
                           const ProxOptions& options = {});

/// A^T (A x - y).
ImageTensor grad_quadratic(const QuadraticDataTerm& dt, const ImageTensor& x);

struct CgResult {
  ImageTensor x;
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Conjugate gradient for a symmetric positive-definite operator. Throws
/// NumericError with the final residual if the tolerance is not reached.
CgResult conjugate_gradient(const std::function<ImageTensor(const ImageTensor&)>& apply, const ImageTensor& b,
                            ImageTensor x0, double tolerance, int max_iterations);

}  // namespace spnp
