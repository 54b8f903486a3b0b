#pragma once

#include "spnp/image.hpp"
#include "spnp/kernel.hpp"
#include "spnp/linear_operator.hpp"
#include "spnp/rng.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <string>

namespace testing {

inline spnp::ImageTensor random_image(const spnp::Shape& s, spnp::GaussianRng& rng, double scale = 1.0) {
  spnp::ImageTensor x(s);
  for (auto& v : x.data()) v = scale * rng.normal();
  return x;
}

inline spnp::BlurKernel random_kernel(int kh, int kw, spnp::GaussianRng& rng) {
  Eigen::MatrixXd w(kh, kw);
  for (int i = 0; i < kh; ++i) {
    for (int j = 0; j < kw; ++j) w(i, j) = rng.uniform();
  }
  return spnp::BlurKernel(kh, kw, w).normalized();
}

/// Columns are A e_i.
inline Eigen::MatrixXd dense(const spnp::LinearOperator& op, const spnp::Shape& s) {
  const auto n = static_cast<Eigen::Index>(s.size());
  Eigen::MatrixXd A(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    spnp::ImageTensor e(s, 0.0);
    e.data()[i] = 1.0;
    A.col(i) = op.forward(e).data();
  }
  return A;
}

inline Eigen::MatrixXd random_spd(int d, double lo, double hi, spnp::GaussianRng& rng) {
  Eigen::MatrixXd G(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) G(i, j) = rng.normal();
  }
  const Eigen::MatrixXd Q = Eigen::HouseholderQR<Eigen::MatrixXd>(G).householderQ();
  Eigen::VectorXd l(d);
  for (int i = 0; i < d; ++i) l[i] = lo + (hi - lo) * rng.uniform();
  return Q * l.asDiagonal() * Q.transpose();
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("spnp-test-" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testing
