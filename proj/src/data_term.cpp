#include "spnp/data_term.hpp"

#include "spnp/errors.hpp"

#include <fmt/format.h>

#include <cmath>

namespace spnp {

QuadraticDataTerm::QuadraticDataTerm(LinearOperator op, ImageTensor y)
    : op_(std::move(op)), y_(std::move(y)), aty_(op_.adjoint(y_)) {
  if (!y_.all_finite()) throw ParameterError("measurement contains non-finite values");
}

double QuadraticDataTerm::value(const ImageTensor& x) const {
  const ImageTensor r = op_.forward(x) - y_;
  return 0.5 * r.data().squaredNorm();
}

ImageTensor grad_quadratic(const QuadraticDataTerm& dt, const ImageTensor& x) {
  return dt.op().adjoint(dt.op().forward(x) - dt.y());
}

CgResult conjugate_gradient(const std::function<ImageTensor(const ImageTensor&)>& apply, const ImageTensor& b,
                            ImageTensor x, double tolerance, int max_iterations) {
  require_same_shape(x, b, "conjugate_gradient");
  const double bnorm = norm(b);
  if (bnorm == 0.0) return CgResult{ImageTensor(b.shape(), 0.0), 0, 0.0};
  ImageTensor r = b - apply(x);
  ImageTensor p = r;
  double rr = dot(r, r);
  int it = 0;
  while (std::sqrt(rr) > tolerance * bnorm && it < max_iterations) {
    const ImageTensor Ap = apply(p);
    const double pAp = dot(p, Ap);
    if (!(pAp > 0.0)) throw NumericError("conjugate gradient: operator is not positive definite");
    const double alpha = rr / pAp;
    x.data() += alpha * p.data();
    r.data() -= alpha * Ap.data();
    const double rr_new = dot(r, r);
    p.data() = r.data() + (rr_new / rr) * p.data();
    rr = rr_new;
    ++it;
  }
  const double rel = norm(b - apply(x)) / bnorm;
  if (std::sqrt(rr) > tolerance * bnorm) {
    throw NumericError(fmt::format("conjugate gradient did not converge in {} iterations (relative residual {:.3e})",
                                   it, rel));
  }
  return CgResult{std::move(x), it, rel};
}

ImageTensor prox_quadratic(const QuadraticDataTerm& dt, const ImageTensor& z, double gamma, const ProxOptions& options) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ParameterError("prox weight gamma must be positive");
  dt.op().check_shape(z);
  require_same_shape(z, dt.y(), "prox_quadratic");
  ImageTensor rhs = z + gamma * dt.adjoint_y();
  const bool direct = options.method == ProxMethod::Direct ||
                      (options.method == ProxMethod::Auto && dt.op().has_diagonal_normal());
  if (direct) return dt.op().solve_shifted_normal(rhs, gamma);
  const LinearOperator& op = dt.op();
  auto apply = [&op, gamma](const ImageTensor& v) { return v + gamma * op.normal(v); };
  return conjugate_gradient(apply, rhs, z, options.cg_tolerance, options.cg_max_iterations).x;
}

}  // namespace spnp
