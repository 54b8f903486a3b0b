#pragma once

#include "spnp/image.hpp"
#include "spnp/linear_operator.hpp"

#include <cstdint>

namespace spnp {

struct Measurement {
  ImageTensor y;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

/// y = A x + e, e ~ N(0, noise_sigma^2 I) drawn from GaussianRng(seed) in
/// pixel order. noise_sigma == 0 returns A x bit-for-bit.
Measurement generate_measurement(const ImageTensor& x, const LinearOperator& op, double noise_sigma,
                                 std::uint64_t seed);

}  // namespace spnp
