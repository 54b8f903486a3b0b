#include "helpers.hpp"
#include "oracle_values.hpp"

#include "spnp/errors.hpp"
#include "spnp/metrics.hpp"

#include <doctest.h>

#include <cmath>

using namespace spnp;

namespace {

// Same test images as the SSIM reference script.
ImageTensor smooth_pattern(int h, int w, int k) {
  ImageTensor x(Shape{h, w, 1});
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) x(0, i, j) = 0.5 + 0.3 * std::sin(0.3 * i + 0.2 * k) * std::cos(0.25 * j - 0.1 * k);
  }
  return x;
}

ImageTensor perturbed(const ImageTensor& x, int k) {
  ImageTensor y = x;
  for (int i = 0; i < x.height(); ++i) {
    for (int j = 0; j < x.width(); ++j) {
      const double t = std::sin(12.9898 * i + 78.233 * j + 3.7 * k) * 43758.5453;
      const double pattern = t - std::floor(t);
      y(0, i, j) = std::clamp(x(0, i, j) + 0.2 * (pattern - 0.5), 0.0, 1.0);
    }
  }
  return y;
}

}  // namespace

TEST_CASE("psnr of a known error") {
  const ImageTensor ref(Shape{10, 10, 1}, 0.5);
  CHECK(psnr(ref + ImageTensor(Shape{10, 10, 1}, 0.1), ref) == doctest::Approx(20.0).epsilon(1e-12));
  CHECK(psnr(ref + ImageTensor(Shape{10, 10, 1}, 0.2), ref, 2.0) == doctest::Approx(20.0).epsilon(1e-12));
  CHECK_THROWS_AS(psnr(ref, ref, 0.0), ParameterError);
  CHECK_THROWS_AS(psnr(ref, ImageTensor(Shape{10, 9, 1})), DimensionError);
}

TEST_CASE("psnr is capped for identical images") {
  const ImageTensor ref(Shape{4, 4, 1}, 0.3);
  const PsnrResult r = psnr_ex(ref, ref);
  CHECK(r.capped);
  CHECK(r.db == kPsnrCap);
  CHECK_FALSE(psnr_ex(ref + ImageTensor(Shape{4, 4, 1}, 0.01), ref).capped);
}

TEST_CASE("ssim basics") {
  GaussianRng rng(1);
  ImageTensor x(Shape{64, 64, 1});
  for (auto& v : x.data()) v = rng.uniform();
  CHECK(ssim(x, x) == doctest::Approx(1.0).epsilon(1e-12));
  ImageTensor y(Shape{64, 64, 1});
  for (auto& v : y.data()) v = rng.uniform();
  CHECK(std::abs(ssim(x, y)) <= 0.1);
  CHECK_THROWS_AS(ssim(ImageTensor(Shape{10, 20, 1}), ImageTensor(Shape{10, 20, 1})), ParameterError);
}

TEST_CASE("ssim agrees with the reference implementation") {
  for (const auto& c : oracle::kSsim) {
    const ImageTensor x = smooth_pattern(c.h, c.w, c.k);
    CAPTURE(c.k);
    CHECK(std::abs(ssim(perturbed(x, c.k), x) - c.value) <= 1e-4);
  }
}

TEST_CASE("multichannel ssim averages channels") {
  const ImageTensor a = smooth_pattern(20, 20, 1);
  const ImageTensor b = perturbed(a, 1);
  ImageTensor a3(Shape{20, 20, 2});
  ImageTensor b3(Shape{20, 20, 2});
  a3.data() << a.data(), a.data();
  b3.data() << b.data(), a.data();
  CHECK(ssim(b3, a3) == doctest::Approx(0.5 * (ssim(b, a) + 1.0)));
}
