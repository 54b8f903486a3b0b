#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <string>

namespace spnp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct Shape {
  int height = 0;
  int width = 0;
  int channels = 0;

  [[nodiscard]] std::size_t size() const {
    return static_cast<std::size_t>(height) * width * channels;
  }
  [[nodiscard]] std::size_t plane() const { return static_cast<std::size_t>(height) * width; }
  [[nodiscard]] std::string str() const;

  friend bool operator==(const Shape&, const Shape&) = default;
};

/// H x W x C image in planar layout: all of channel 0 row-major, then channel 1, ...
///
/// Pixel values are nominally in [0, 1] but nothing here clamps them; solver
/// iterates are allowed to leave that range. Clamping happens at export.
class ImageTensor {
 public:
  ImageTensor() = default;
  explicit ImageTensor(Shape shape, double fill = 0.0);
  ImageTensor(Shape shape, Vec data);

  /// A d-dimensional vector viewed as a 1 x d x 1 image.
  static ImageTensor from_vector(Vec v);

  [[nodiscard]] const Shape& shape() const { return shape_; }
  [[nodiscard]] int height() const { return shape_.height; }
  [[nodiscard]] int width() const { return shape_.width; }
  [[nodiscard]] int channels() const { return shape_.channels; }
  [[nodiscard]] std::size_t size() const { return shape_.size(); }

  [[nodiscard]] const Vec& data() const { return data_; }
  Vec& data() { return data_; }

  double& operator()(int c, int i, int j) { return data_[index(c, i, j)]; }
  [[nodiscard]] double operator()(int c, int i, int j) const { return data_[index(c, i, j)]; }

  [[nodiscard]] std::size_t index(int c, int i, int j) const {
    return (static_cast<std::size_t>(c) * shape_.height + i) * shape_.width + j;
  }

  [[nodiscard]] bool all_finite() const;

  /// Same shape, data replaced.
  [[nodiscard]] ImageTensor with_data(Vec data) const;

  ImageTensor& operator+=(const ImageTensor& o);
  ImageTensor& operator-=(const ImageTensor& o);
  ImageTensor& operator*=(double a);

  friend ImageTensor operator+(ImageTensor a, const ImageTensor& b) { return a += b; }
  friend ImageTensor operator-(ImageTensor a, const ImageTensor& b) { return a -= b; }
  friend ImageTensor operator*(double s, ImageTensor a) { return a *= s; }
  friend ImageTensor operator*(ImageTensor a, double s) { return a *= s; }

 private:
  Shape shape_{};
  Vec data_;
};

void require_same_shape(const ImageTensor& a, const ImageTensor& b, const char* what);

[[nodiscard]] double dot(const ImageTensor& a, const ImageTensor& b);
[[nodiscard]] double norm(const ImageTensor& a);

/// Copy with every value clamped to [0, 1]; used only when exporting.
[[nodiscard]] ImageTensor clamped01(const ImageTensor& x);

}  // namespace spnp
