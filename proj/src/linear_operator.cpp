#include "spnp/linear_operator.hpp"

#include "fft2d.hpp"
#include "spnp/errors.hpp"

#include <fmt/format.h>

namespace spnp {

std::string_view to_string(OperatorKind k) {
  switch (k) {
    case OperatorKind::Identity:
      return "identity";
    case OperatorKind::CirculantBlur:
      return "circulant-blur";
    case OperatorKind::Mask:
      return "mask";
  }
  return "unknown";
}

namespace {

int wrap(int i, int n) {
  const int r = i % n;
  return r < 0 ? r + n : r;
}

}  // namespace

LinearOperator LinearOperator::identity() { return LinearOperator{}; }

LinearOperator LinearOperator::circulant_blur(const BlurKernel& kernel, int height, int width) {
  if (height <= 0 || width <= 0) throw DimensionError("circulant operator needs a positive plane size");
  LinearOperator op;
  op.kind_ = OperatorKind::CirculantBlur;
  op.height_ = height;
  op.width_ = width;
  op.kernel_ = kernel;

  // Embed the PSF with its center at the origin; taps that alias onto the
  // same pixel (kernel wider than the plane) accumulate, as periodic
  // convolution would.
  std::vector<std::complex<double>> psf(static_cast<std::size_t>(height) * width);
  const int ch = kernel.kh / 2;
  const int cw = kernel.kw / 2;
  for (int a = 0; a < kernel.kh; ++a) {
    for (int b = 0; b < kernel.kw; ++b) {
      const int i = wrap(a - ch, height);
      const int j = wrap(b - cw, width);
      psf[static_cast<std::size_t>(i) * width + j] += kernel.weights(a, b);
    }
  }
  detail::fft2d(psf, height, width);
  op.spectrum_ = std::make_shared<const std::vector<std::complex<double>>>(std::move(psf));
  return op;
}

LinearOperator LinearOperator::mask(const ImageTensor& m) {
  if (!m.all_finite()) throw NumericError("mask values must be finite");
  LinearOperator op;
  op.kind_ = OperatorKind::Mask;
  op.height_ = m.height();
  op.width_ = m.width();
  op.mask_ = std::make_shared<const ImageTensor>(m);
  return op;
}

void LinearOperator::check_shape(const ImageTensor& x) const {
  switch (kind_) {
    case OperatorKind::Identity:
      return;
    case OperatorKind::CirculantBlur:
      if (x.height() != height_ || x.width() != width_) {
        throw DimensionError(fmt::format("circulant operator built for {}x{} planes, got image {}",
                                         height_, width_, x.shape().str()));
      }
      return;
    case OperatorKind::Mask:
      if (x.shape() != mask_->shape()) {
        throw DimensionError(fmt::format("mask shape {} vs image {}", mask_->shape().str(), x.shape().str()));
      }
      return;
  }
}

ImageTensor LinearOperator::apply_spectrum(const ImageTensor& x, bool conjugate) const {
  const auto& h = *spectrum_;
  ImageTensor out(x.shape());
  const std::size_t plane = x.shape().plane();
  std::vector<std::complex<double>> buf(plane);
  for (int c = 0; c < x.channels(); ++c) {
    const std::size_t off = c * plane;
    for (std::size_t p = 0; p < plane; ++p) buf[p] = x.data()[static_cast<Eigen::Index>(off + p)];
    detail::fft2d(buf, height_, width_);
    for (std::size_t p = 0; p < plane; ++p) buf[p] *= conjugate ? std::conj(h[p]) : h[p];
    detail::ifft2d(buf, height_, width_);
    for (std::size_t p = 0; p < plane; ++p) out.data()[static_cast<Eigen::Index>(off + p)] = buf[p].real();
  }
  return out;
}

ImageTensor LinearOperator::forward(const ImageTensor& x) const {
  check_shape(x);
  switch (kind_) {
    case OperatorKind::Identity:
      return x;
    case OperatorKind::CirculantBlur:
      return apply_spectrum(x, false);
    case OperatorKind::Mask:
      return x.with_data(x.data().cwiseProduct(mask_->data()));
  }
  return x;
}

ImageTensor LinearOperator::adjoint(const ImageTensor& v) const {
  check_shape(v);
  switch (kind_) {
    case OperatorKind::Identity:
      return v;
    case OperatorKind::CirculantBlur:
      return apply_spectrum(v, true);
    case OperatorKind::Mask:
      return v.with_data(v.data().cwiseProduct(mask_->data()));
  }
  return v;
}

ImageTensor LinearOperator::normal(const ImageTensor& x) const { return adjoint(forward(x)); }

ImageTensor LinearOperator::solve_shifted_normal(const ImageTensor& rhs, double gamma) const {
  check_shape(rhs);
  switch (kind_) {
    case OperatorKind::Identity:
      return rhs * (1.0 / (1.0 + gamma));
    case OperatorKind::Mask: {
      const Vec m2 = mask_->data().cwiseAbs2();
      return rhs.with_data(rhs.data().cwiseQuotient((1.0 + gamma * m2.array()).matrix()));
    }
    case OperatorKind::CirculantBlur: {
      const auto& h = *spectrum_;
      ImageTensor out(rhs.shape());
      const std::size_t plane = rhs.shape().plane();
      std::vector<std::complex<double>> buf(plane);
      for (int c = 0; c < rhs.channels(); ++c) {
        const std::size_t off = c * plane;
        for (std::size_t p = 0; p < plane; ++p) buf[p] = rhs.data()[static_cast<Eigen::Index>(off + p)];
        detail::fft2d(buf, height_, width_);
        for (std::size_t p = 0; p < plane; ++p) buf[p] /= 1.0 + gamma * std::norm(h[p]);
        detail::ifft2d(buf, height_, width_);
        for (std::size_t p = 0; p < plane; ++p) out.data()[static_cast<Eigen::Index>(off + p)] = buf[p].real();
      }
      return out;
    }
  }
  return rhs;
}

const std::vector<std::complex<double>>& LinearOperator::spectrum() const {
  if (!spectrum_) throw Error("operator has no transfer spectrum");
  return *spectrum_;
}

ImageTensor apply_forward(const LinearOperator& op, const ImageTensor& x) { return op.forward(x); }

ImageTensor apply_adjoint(const LinearOperator& op, const ImageTensor& v) { return op.adjoint(v); }

ImageTensor periodic_convolve(const BlurKernel& kernel, const ImageTensor& x) {
  ImageTensor out(x.shape());
  const int ch = kernel.kh / 2;
  const int cw = kernel.kw / 2;
  const int h = x.height();
  const int w = x.width();
  for (int c = 0; c < x.channels(); ++c) {
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < w; ++j) {
        double acc = 0.0;
        for (int a = 0; a < kernel.kh; ++a) {
          for (int b = 0; b < kernel.kw; ++b) {
            acc += kernel.weights(a, b) * x(c, wrap(i - (a - ch), h), wrap(j - (b - cw), w));
          }
        }
        out(c, i, j) = acc;
      }
    }
  }
  return out;
}

}  // namespace spnp
