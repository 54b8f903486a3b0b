#include "helpers.hpp"

#include "spnp/data_term.hpp"
#include "spnp/errors.hpp"
#include "spnp/image_io.hpp"
#include "spnp/measurement.hpp"

#include <doctest.h>

#include <fstream>

using namespace spnp;
using testing::dense;
using testing::random_image;
using testing::random_kernel;

TEST_CASE("image tensor basics") {
  ImageTensor a(Shape{2, 3, 2}, 1.0);
  CHECK(a.size() == 12);
  a(1, 1, 2) = 5.0;
  CHECK(a.data()[a.index(1, 1, 2)] == 5.0);
  CHECK(a.index(1, 0, 0) == 6);
  const ImageTensor b = 2.0 * a - a;
  CHECK(norm(b - a) == 0.0);
  CHECK_THROWS_AS(ImageTensor(Shape{0, 3, 1}), DimensionError);
  CHECK_THROWS_AS(ImageTensor(Shape{2, 2, 1}, Vec::Zero(3)), DimensionError);
  CHECK_THROWS_AS(a + ImageTensor(Shape{3, 2, 2}), DimensionError);
  const ImageTensor v = ImageTensor::from_vector(Vec::LinSpaced(4, 0.0, 3.0));
  CHECK(v.shape() == Shape{1, 4, 1});
}

TEST_CASE("kernel construction and normalization") {
  const BlurKernel g = BlurKernel::gaussian(7, 1.6);
  CHECK(g.sum() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(g.is_symmetric(1e-15));
  CHECK(BlurKernel::box(3).weights(1, 1) == doctest::Approx(1.0 / 9.0));
  const BlurKernel l = BlurKernel::line(9, 7.0, 30.0);
  CHECK(l.sum() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(BlurKernel(2, 3, Mat::Ones(2, 3)), ParameterError);
  CHECK_THROWS_AS(BlurKernel(1, 1, Mat::Zero(1, 1)).normalized(), NumericError);
}

TEST_CASE("kernel text round trip") {
  const auto dir = testing::scratch("kernel");
  GaussianRng rng(1);
  const BlurKernel k = random_kernel(3, 5, rng);
  save_kernel(k, dir / "k.txt");
  const BlurKernel r = load_kernel(dir / "k.txt");
  CHECK(r.kh == 3);
  CHECK(r.kw == 5);
  CHECK((r.weights - k.weights).cwiseAbs().maxCoeff() < 1e-15);
  // unnormalized file is rescaled on load
  std::ofstream(dir / "raw.txt") << "3 3\n0 1 0\n1 4 1\n0 1 0\n";
  CHECK(load_kernel(dir / "raw.txt").sum() == doctest::Approx(1.0));
  std::ofstream(dir / "bad.txt") << "3 3\n1 2 3\n";
  CHECK_THROWS(load_kernel(dir / "bad.txt"));
}

TEST_CASE("fft blur matches direct periodic convolution") {
  GaussianRng rng(2);
  for (const auto& [h, w, kh, kw] : {std::array{8, 8, 3, 3}, std::array{7, 10, 5, 3}, std::array{16, 9, 9, 9}}) {
    const BlurKernel k = random_kernel(kh, kw, rng);
    const ImageTensor x = random_image(Shape{h, w, 2}, rng);
    const LinearOperator op = LinearOperator::circulant_blur(k, h, w);
    CHECK((op.forward(x).data() - periodic_convolve(k, x).data()).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("delta kernel and identity operator are identities") {
  GaussianRng rng(3);
  const ImageTensor x = random_image(Shape{6, 5, 3}, rng);
  const LinearOperator d = LinearOperator::circulant_blur(BlurKernel::delta(), 6, 5);
  CHECK((d.forward(x).data() - x.data()).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(norm(LinearOperator::identity().forward(x) - x) == 0.0);
}

TEST_CASE("adjoint dot-product identity") {
  GaussianRng rng(4);
  for (int inst = 0; inst < 5; ++inst) {
    const Shape s{8 + inst, 7, 1 + inst % 3};
    const LinearOperator blur = LinearOperator::circulant_blur(random_kernel(5, 3, rng), s.height, s.width);
    ImageTensor m(s);
    for (auto& v : m.data()) v = rng.uniform() < 0.4 ? 0.0 : 1.0;
    const LinearOperator mask = LinearOperator::mask(m);
    for (const LinearOperator* op : {&blur, &mask}) {
      const ImageTensor x = random_image(s, rng);
      const ImageTensor v = random_image(s, rng);
      const ImageTensor Ax = op->forward(x);
      CHECK(std::abs(dot(Ax, v) - dot(x, op->adjoint(v))) <= 1e-10 * norm(Ax) * norm(v));
    }
  }
}

TEST_CASE("dense adjoint equals transpose") {
  GaussianRng rng(5);
  const Shape s{6, 6, 1};
  const LinearOperator op = LinearOperator::circulant_blur(random_kernel(3, 3, rng), 6, 6);
  const Mat A = dense(op, s);
  Mat At(36, 36);
  for (int i = 0; i < 36; ++i) {
    ImageTensor e(s, 0.0);
    e.data()[i] = 1.0;
    At.col(i) = op.adjoint(e).data();
  }
  CHECK((At - A.transpose()).cwiseAbs().maxCoeff() < 1e-14);
  ImageTensor x = random_image(s, rng);
  CHECK((op.normal(x).data() - A.transpose() * A * x.data()).norm() < 1e-13);
}

TEST_CASE("operator shape checks") {
  const LinearOperator op = LinearOperator::circulant_blur(BlurKernel::box(3), 8, 8);
  CHECK_THROWS_AS(op.forward(ImageTensor(Shape{8, 7, 1})), DimensionError);
  CHECK_THROWS_AS(LinearOperator::circulant_blur(BlurKernel::box(3), 0, 4), DimensionError);
  const LinearOperator m = LinearOperator::mask(ImageTensor(Shape{4, 4, 1}, 1.0));
  CHECK_THROWS_AS(m.forward(ImageTensor(Shape{4, 4, 2})), DimensionError);
}

TEST_CASE("frequency-domain prox equals dense solve") {
  GaussianRng rng(6);
  const Shape s{8, 8, 1};
  for (int inst = 0; inst < 5; ++inst) {
    const LinearOperator op = LinearOperator::circulant_blur(random_kernel(3 + 2 * (inst % 2), 3, rng), 8, 8);
    const ImageTensor y = random_image(s, rng);
    const ImageTensor z = random_image(s, rng);
    const double gamma = 0.05 * std::pow(10.0, inst);
    const QuadraticDataTerm dt(op, y);
    const Mat A = dense(op, s);
    const Vec want = (Mat::Identity(64, 64) + gamma * A.transpose() * A)
                         .ldlt()
                         .solve(z.data() + gamma * A.transpose() * y.data());
    const ImageTensor got = prox_quadratic(dt, z, gamma);
    CHECK((got.data() - want).norm() <= 1e-8 * want.norm());
  }
}

TEST_CASE("prox with a mask operator and conjugate gradient") {
  GaussianRng rng(7);
  const Shape s{5, 6, 2};
  ImageTensor m(s);
  for (auto& v : m.data()) v = rng.uniform();
  const LinearOperator op = LinearOperator::mask(m);
  const ImageTensor y = random_image(s, rng);
  const ImageTensor z = random_image(s, rng);
  const QuadraticDataTerm dt(op, y);
  const double gamma = 2.5;
  Vec want(z.size());
  for (Eigen::Index i = 0; i < want.size(); ++i) {
    const double a = m.data()[i];
    want[i] = (z.data()[i] + gamma * a * y.data()[i]) / (1.0 + gamma * a * a);
  }
  CHECK((prox_quadratic(dt, z, gamma).data() - want).norm() < 1e-12);
  ProxOptions cg;
  cg.method = ProxMethod::ConjugateGradient;
  CHECK((prox_quadratic(dt, z, gamma, cg).data() - want).norm() < 1e-8);
}

TEST_CASE("prox limits") {
  GaussianRng rng(8);
  const Shape s{8, 8, 1};
  const LinearOperator op = LinearOperator::circulant_blur(random_kernel(3, 3, rng), 8, 8);
  const ImageTensor y = random_image(s, rng);
  const ImageTensor z = random_image(s, rng);
  const QuadraticDataTerm dt(op, y);
  CHECK(norm(prox_quadratic(dt, z, 1e-12) - z) < 1e-10);
  CHECK_THROWS_AS(prox_quadratic(dt, z, 0.0), ParameterError);
  CHECK_THROWS_AS(prox_quadratic(dt, z, -1.0), ParameterError);
  // identity operator: (z + gamma y) / (1 + gamma)
  const QuadraticDataTerm id(LinearOperator::identity(), y);
  CHECK(norm(prox_quadratic(id, z, 3.0) - (1.0 / 4.0) * (z + 3.0 * y)) < 1e-14);
}

TEST_CASE("data term gradient matches finite differences") {
  GaussianRng rng(9);
  const Shape s{6, 6, 1};
  const LinearOperator op = LinearOperator::circulant_blur(random_kernel(3, 3, rng), 6, 6);
  const QuadraticDataTerm dt(op, random_image(s, rng));
  const ImageTensor x = random_image(s, rng);
  const ImageTensor g = grad_quadratic(dt, x);
  const double h = 1e-6;
  for (int i = 0; i < 36; i += 5) {
    ImageTensor xp = x;
    ImageTensor xm = x;
    xp.data()[i] += h;
    xm.data()[i] -= h;
    const double fd = (dt.value(xp) - dt.value(xm)) / (2 * h);
    CHECK(fd == doctest::Approx(g.data()[i]).epsilon(1e-6));
  }
}

TEST_CASE("conjugate gradient reports non-convergence") {
  GaussianRng rng(10);
  const Shape s{10, 10, 1};
  const Mat M = testing::random_spd(100, 1e-4, 1.0, rng);
  const auto apply = [&](const ImageTensor& v) { return v.with_data(M * v.data()); };
  const ImageTensor b = random_image(s, rng);
  CHECK_THROWS_AS(conjugate_gradient(apply, b, ImageTensor(s, 0.0), 1e-14, 3), NumericError);
  const CgResult r = conjugate_gradient(apply, b, ImageTensor(s, 0.0), 1e-10, 1000);
  CHECK((M * r.x.data() - b.data()).norm() <= 1e-9 * b.data().norm());
}

TEST_CASE("measurement generation") {
  GaussianRng rng(11);
  const ImageTensor x = random_image(Shape{12, 12, 1}, rng);
  const LinearOperator op = LinearOperator::circulant_blur(BlurKernel::gaussian(5, 1.0), 12, 12);
  const Measurement clean = generate_measurement(x, op, 0.0, 1);
  CHECK(norm(clean.y - op.forward(x)) == 0.0);
  const Measurement a = generate_measurement(x, op, 0.02, 7);
  const Measurement b = generate_measurement(x, op, 0.02, 7);
  CHECK(norm(a.y - b.y) == 0.0);
  CHECK(norm(a.y - generate_measurement(x, op, 0.02, 8).y) > 0.0);
  CHECK_THROWS_AS(generate_measurement(x, op, -0.1, 1), ParameterError);
}

TEST_CASE("measurement noise statistics over 1e6 samples") {
  const ImageTensor x(Shape{1000, 1000, 1}, 0.0);
  const Measurement m = generate_measurement(x, LinearOperator::identity(), 0.02, 12345);
  const double mean = m.y.data().mean();
  const double sd = std::sqrt((m.y.data().array() - mean).square().mean());
  CHECK(std::abs(sd / 0.02 - 1.0) < 0.01);
  CHECK(std::abs(mean) < 1e-4);
}

TEST_CASE("png and pnm round trips") {
  const auto dir = testing::scratch("io");
  ImageTensor x(Shape{5, 7, 3});
  for (std::size_t i = 0; i < x.size(); ++i) x.data()[static_cast<Eigen::Index>(i)] = static_cast<double>(i % 256) / 255.0;
  write_image(x, dir / "a.png");
  CHECK(norm(read_image(dir / "a.png") - x) < 1e-12);
  write_image(x, dir / "a.ppm");
  CHECK(norm(read_image(dir / "a.ppm") - x) < 1e-12);
  ImageTensor g(Shape{4, 4, 1});
  for (std::size_t i = 0; i < g.size(); ++i) g.data()[static_cast<Eigen::Index>(i)] = static_cast<double>(i) * 4099.0 / 65535.0;
  write_image(g, dir / "g16.png", 16);
  CHECK(norm(read_image(dir / "g16.png") - g) < 1e-12);
  write_image(g, dir / "g.pgm");
  CHECK(read_image(dir / "g.pgm").channels() == 1);
  // out-of-range values are clamped at export
  ImageTensor o(Shape{2, 2, 1}, 1.7);
  write_image(o, dir / "o.png");
  CHECK(read_image(dir / "o.png").data().maxCoeff() == 1.0);
  CHECK_THROWS_AS(read_image(dir / "missing.png"), IoError);
  CHECK_THROWS_AS(write_image(x, dir / "x.bmp"), IoError);
}
