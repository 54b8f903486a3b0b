#include "spnp/image.hpp"

#include "spnp/errors.hpp"

#include <fmt/format.h>

namespace spnp {

std::string Shape::str() const { return fmt::format("{}x{}x{}", height, width, channels); }

namespace {

void validate(const Shape& s) {
  if (s.height <= 0 || s.width <= 0 || s.channels <= 0) {
    throw DimensionError("image dimensions must be positive, got " + s.str());
  }
}

}  // namespace

ImageTensor::ImageTensor(Shape shape, double fill) : shape_(shape) {
  validate(shape_);
  data_ = Vec::Constant(static_cast<Eigen::Index>(shape_.size()), fill);
}

ImageTensor::ImageTensor(Shape shape, Vec data) : shape_(shape), data_(std::move(data)) {
  validate(shape_);
  if (static_cast<std::size_t>(data_.size()) != shape_.size()) {
    throw DimensionError(fmt::format("data length {} does not match shape {}", data_.size(), shape_.str()));
  }
}

ImageTensor ImageTensor::from_vector(Vec v) {
  const int d = static_cast<int>(v.size());
  return ImageTensor(Shape{1, d, 1}, std::move(v));
}

bool ImageTensor::all_finite() const { return data_.allFinite(); }

ImageTensor ImageTensor::with_data(Vec data) const { return ImageTensor(shape_, std::move(data)); }

ImageTensor& ImageTensor::operator+=(const ImageTensor& o) {
  require_same_shape(*this, o, "image addition");
  data_ += o.data_;
  return *this;
}

ImageTensor& ImageTensor::operator-=(const ImageTensor& o) {
  require_same_shape(*this, o, "image subtraction");
  data_ -= o.data_;
  return *this;
}

ImageTensor& ImageTensor::operator*=(double a) {
  data_ *= a;
  return *this;
}

void require_same_shape(const ImageTensor& a, const ImageTensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw DimensionError(fmt::format("{}: shape {} vs {}", what, a.shape().str(), b.shape().str()));
  }
}

double dot(const ImageTensor& a, const ImageTensor& b) {
  require_same_shape(a, b, "dot");
  return a.data().dot(b.data());
}

double norm(const ImageTensor& a) { return a.data().norm(); }

ImageTensor clamped01(const ImageTensor& x) {
  return x.with_data(x.data().cwiseMax(0.0).cwiseMin(1.0));
}

}  // namespace spnp
