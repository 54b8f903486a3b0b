#include "helpers.hpp"

#include "spnp/adaptation.hpp"
#include "spnp/errors.hpp"
#include "spnp/score_function.hpp"

#include <doctest.h>

#include <limits>

using namespace spnp;

namespace {

PriorPtr gaussian(double mean, double std, int d) {
  return std::make_shared<GaussianImagePrior>(GaussianPrior(Vec::Constant(d, mean), std));
}

/// Direct score of a Gaussian prior on [-1, 1] pixels.
class SymmetricGaussianScore final : public ScoreFunction {
 public:
  SymmetricGaussianScore(double mean, double std) : mean_(mean), std_(std) {}
  Convention convention() const override { return Convention::NoiseLevelDirect; }
  ValueDomain value_domain() const override { return ValueDomain::Symmetric; }
  ImageTensor evaluate(const ImageTensor& x, double sigma) const override {
    const GaussianPrior p(Vec::Constant(static_cast<Eigen::Index>(x.size()), mean_), std_);
    return x.with_data(gaussian_score(p, x.data(), sigma));
  }
  std::string describe() const override { return "symmetric gaussian"; }

 private:
  double mean_;
  double std_;
};

class NanScore final : public ScoreFunction {
 public:
  Convention convention() const override { return Convention::NoiseLevelDirect; }
  ImageTensor evaluate(const ImageTensor& x, double) const override {
    return ImageTensor(x.shape(), std::numeric_limits<double>::quiet_NaN());
  }
  std::string describe() const override { return "nan"; }
};

}  // namespace

TEST_CASE("sigma zero returns the input unchanged") {
  GaussianRng rng(1);
  const ImageTensor x = testing::random_image(Shape{4, 4, 1}, rng);
  const PriorPtr p = gaussian(0.5, 0.2, 16);
  for (const ScorePtr& s : {ScorePtr(std::make_shared<DirectAnalyticScore>(p)),
                            emulate_vp_network(p, NoiseSchedule::vp_linear(1e-4, 0.02, 100))}) {
    AdaptOptions lenient;
    lenient.range = RangePolicy::Lenient;
    CHECK(norm(AdaptedDenoiser(s, lenient).denoise(x, 0.0) - x) == 0.0);
  }
  CHECK(norm(MmseDenoiser(p).denoise(x, 0.0) - x) == 0.0);
}

TEST_CASE("adapted analytic scores reproduce the posterior mean") {
  GaussianRng rng(2);
  const ImageTensor x = testing::random_image(Shape{3, 3, 1}, rng);
  const PriorPtr p = gaussian(0.4, 0.3, 9);
  const MmseDenoiser mmse(p);
  const double sigma = 0.25;
  const AdaptedDenoiser direct(std::make_shared<DirectAnalyticScore>(p));
  CHECK(norm(direct.denoise(x, sigma) - mmse.denoise(x, sigma)) < 1e-14);
  // VE at a grid level
  const NoiseSchedule ve = NoiseSchedule::ve({0.1, 0.25, 0.5});
  const AdaptedDenoiser vden(emulate_ve_network(p, ve));
  CHECK(norm(vden.denoise(x, sigma) - mmse.denoise(x, sigma)) < 1e-14);
  // VP at a level reachable on the interpolated grid
  const NoiseSchedule vp = NoiseSchedule::vp_from_sigmas({0.1, 0.25, 0.5});
  const AdaptedDenoiser pden(emulate_vp_network(p, vp));
  CHECK(norm(pden.denoise(x, sigma) - mmse.denoise(x, sigma)) < 1e-13);
  const LevelDenoiser lv = adapt_vp(emulate_vp_network(p, vp), sigma);
  CHECK(norm(lv(x) - mmse.denoise(x, sigma)) < 1e-13);
  CHECK(lv.match().c == doctest::Approx(1.0 / std::sqrt(1.0 + sigma * sigma)));
}

TEST_CASE("scaled Tweedie template") {
  GaussianRng rng(3);
  const ImageTensor x = testing::random_image(Shape{2, 2, 1}, rng);
  const PriorPtr p = gaussian(0.5, 0.2, 4);
  for (double c : {1.0, 0.7, 0.1}) {
    const ScaledAnalyticScore s(p, c);
    CHECK(norm(tweedie_denoise(s, x, c, 0.3) - MmseDenoiser(p).denoise(x, 0.3)) < 1e-13);
  }
  CHECK_THROWS_AS(tweedie_denoise(ScaledAnalyticScore(p, 1.0), x, 0.0, 0.3), ParameterError);
}

TEST_CASE("symmetric value domain is wrapped") {
  // N(m', s'^2) on [-1, 1] is N((m' + 1)/2, (s'/2)^2) on [0, 1]
  const ScorePtr s = std::make_shared<SymmetricGaussianScore>(0.2, 0.4);
  const AdaptedDenoiser den(s);
  const MmseDenoiser ref(gaussian(0.6, 0.2, 5));
  GaussianRng rng(4);
  const ImageTensor x = testing::random_image(Shape{1, 5, 1}, rng, 0.3);
  CHECK(norm(den.denoise(x, 0.1) - ref.denoise(x, 0.1)) < 1e-14);
}

TEST_CASE("convention and schedule mismatches") {
  const PriorPtr p = gaussian(0.5, 0.2, 4);
  const NoiseSchedule ve = NoiseSchedule::ve_geometric(0.01, 1.0, 10);
  const NoiseSchedule vp = NoiseSchedule::vp_linear(1e-4, 0.02, 10);
  CHECK_THROWS_AS(emulate_ve_network(p, vp), ConfigError);
  CHECK_THROWS_AS(emulate_vp_network(p, ve), ConfigError);
  CHECK_THROWS_AS(adapt_ve(emulate_vp_network(p, vp), 0.1), ConfigError);
  CHECK_THROWS_AS(adapt_vp(emulate_ve_network(p, ve), 0.1), ConfigError);
  CHECK_THROWS_AS(tweedie_denoise(*emulate_ve_network(p, ve), ImageTensor(Shape{2, 2, 1}), 1.0, 0.1), ConfigError);
}

TEST_CASE("emulators reject times off their grid") {
  const PriorPtr p = gaussian(0.5, 0.2, 4);
  const ScorePtr ve = emulate_ve_network(p, NoiseSchedule::ve_geometric(0.01, 1.0, 10));
  const ImageTensor x(Shape{2, 2, 1}, 0.5);
  CHECK_THROWS_AS(ve->evaluate(x, 2.5), ConditionError);
  CHECK_THROWS_AS(ve->evaluate(x, 11.0), ConditionError);
  const ScorePtr vp = emulate_vp_network(p, NoiseSchedule::vp_linear(1e-4, 0.02, 10));
  CHECK_NOTHROW(vp->evaluate(x, 2.5));
  CHECK_THROWS_AS(vp->evaluate(x, 10.5), ConditionError);
}

TEST_CASE("range policy reaches the denoiser") {
  const PriorPtr p = gaussian(0.5, 0.2, 4);
  const ScorePtr ve = emulate_ve_network(p, NoiseSchedule::ve_geometric(0.01, 1.0, 10));
  const ImageTensor x(Shape{2, 2, 1}, 0.5);
  CHECK_THROWS_AS(AdaptedDenoiser(ve).denoise(x, 3.0), RangeError);
  AdaptOptions lenient;
  lenient.range = RangePolicy::Lenient;
  const AdaptedDenoiser den(ve, lenient);
  CHECK(den.match(3.0).clamped);
  CHECK(den.denoise(x, 3.0).all_finite());
  CHECK_THROWS_AS(den.denoise(x, -1.0), ParameterError);
}

TEST_CASE("non-finite score output is reported") {
  const AdaptedDenoiser den(std::make_shared<NanScore>());
  CHECK_THROWS_AS(den.denoise(ImageTensor(Shape{2, 2, 1}, 0.5), 0.1), NumericError);
}

TEST_CASE("patch-lifted score averages overlapping patches") {
  const auto patch_prior = std::make_shared<GaussianImagePrior>(GaussianPrior(Vec::Constant(4, 0.5), 0.2));
  // a Gaussian patch prior lifted to images behaves like the patch GMM lift
  const PatchGmmPrior lifted(GmmPrior::from_gaussian(patch_prior->prior()), 2, 2, 1);
  const PatchLiftedScore s(std::make_shared<DirectAnalyticScore>(patch_prior), 2, 2);
  GaussianRng rng(5);
  const ImageTensor x = testing::random_image(Shape{5, 6, 1}, rng, 0.2);
  CHECK(norm(s.evaluate(x, 0.3) - lifted.score(x, 0.3)) < 1e-12);
  CHECK_THROWS_AS(s.evaluate(ImageTensor(Shape{1, 6, 1}), 0.3), DimensionError);
}
