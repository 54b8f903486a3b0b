#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace spnp {

/// Reproducible Gaussian source.
///
/// Uniforms come from std::mt19937_64, whose output sequence is fixed by the
/// C++ standard. Each 64-bit draw is reduced to a double in (0, 1) from its
/// top 53 bits, offset by half an ulp so that 0 never occurs. Normals are
/// produced in pairs by the Box-Muller transform
///
///   r = sqrt(-2 ln u1),  z0 = r cos(2 pi u2),  z1 = r sin(2 pi u2)
///
/// and handed out z0 first. std::normal_distribution is avoided because its
/// algorithm is implementation-defined.
class GaussianRng {
 public:
  explicit GaussianRng(std::uint64_t seed) : engine_(seed) {}

  double uniform();
  double normal();
  Eigen::VectorXd normal_vector(Eigen::Index n);
  /// Uniform integer in [0, n).
  std::uint64_t index(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Mixes a base seed with a stream id (SplitMix64 finalizer) so that
/// per-image and per-method streams are decorrelated but reproducible.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace spnp
