#include "spnp/measurement.hpp"

#include "spnp/errors.hpp"
#include "spnp/rng.hpp"

#include <cmath>

namespace spnp {

Measurement generate_measurement(const ImageTensor& x, const LinearOperator& op, double noise_sigma,
                                 std::uint64_t seed) {
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw ParameterError("measurement noise sigma must be a finite nonnegative number");
  }
  ImageTensor y = op.forward(x);
  if (noise_sigma > 0.0) {
    GaussianRng rng(seed);
    for (Eigen::Index i = 0; i < y.data().size(); ++i) y.data()[i] += noise_sigma * rng.normal();
  }
  return Measurement{std::move(y), noise_sigma, seed};
}

}  // namespace spnp
