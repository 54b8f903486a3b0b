#include "helpers.hpp"

#include "spnp/adaptation.hpp"
#include "spnp/dsm.hpp"
#include "spnp/errors.hpp"
#include "spnp/mlp.hpp"
#include "spnp/solvers.hpp"

#include <doctest.h>

#include <fstream>
#include <numeric>

using namespace spnp;

namespace {

MlpScoreNet small_net(ScheduleKind kind, Activation act) {
  const NoiseSchedule s = kind == ScheduleKind::VE ? toy_ve_schedule() : toy_vp_schedule();
  MlpScoreNet net(2, {8, 8}, act, kind == ScheduleKind::VE ? Convention::VE : Convention::VP, s);
  net.initialize(3);
  return net;
}

DsmTrainConfig quick_config() {
  DsmTrainConfig c = toy_training_config(ScheduleKind::VP);
  c.steps = 300;
  c.batch_size = 128;
  c.hidden = {16, 16};
  return c;
}

}  // namespace

TEST_CASE("backpropagation matches finite differences") {
  const GmmPrior prior = make_toy_gmm();
  for (ScheduleKind kind : {ScheduleKind::VE, ScheduleKind::VP}) {
    for (Activation act : {Activation::SiLU, Activation::Tanh}) {
      const MlpScoreNet net = small_net(kind, act);
      GaussianRng rng(4);
      const DsmBatch b = make_dsm_batch(sample_gmm(prior, 16, 5), net.schedule(), rng);
      CHECK(grad_check(net, b, DsmWeighting::Unweighted) <= 1e-4);
      CHECK(grad_check(net, b, DsmWeighting::NoiseVariance) <= 1e-4);
    }
  }
}

TEST_CASE("loss weights scale the gradient linearly") {
  const MlpScoreNet net = small_net(ScheduleKind::VP, Activation::SiLU);
  GaussianRng rng(6);
  const DsmBatch b = make_dsm_batch(sample_gmm(make_toy_gmm(), 32, 7), net.schedule(), rng);
  const Eigen::RowVectorXd w = Eigen::RowVectorXd::Ones(32);
  Vec g1;
  Vec g2;
  const double l1 = net.loss_and_gradient(b.input, b.cond, b.target, w, &g1);
  const double l2 = net.loss_and_gradient(b.input, b.cond, b.target, 2.0 * w, &g2);
  CHECK(l2 == doctest::Approx(2.0 * l1));
  CHECK((g2 - 2.0 * g1).norm() <= 1e-12 * g1.norm());
  // duplicating every sample leaves the batch mean unchanged
  Mat X2(2, 64);
  X2 << b.input, b.input;
  Eigen::RowVectorXd c2(64);
  c2 << b.cond, b.cond;
  Mat T2(2, 64);
  T2 << b.target, b.target;
  Vec gd;
  CHECK(net.loss_and_gradient(X2, c2, T2, Eigen::RowVectorXd::Ones(64), &gd) == doctest::Approx(l1));
  CHECK((gd - g1).norm() <= 1e-12 * g1.norm());
}

TEST_CASE("a zero network pays the mean squared target") {
  MlpScoreNet net = small_net(ScheduleKind::VE, Activation::Tanh);
  net.set_parameters(Vec::Zero(net.parameter_count()));
  GaussianRng rng(8);
  const DsmBatch b = make_dsm_batch(sample_gmm(make_toy_gmm(), 20000, 9), net.schedule(), rng);
  const double want = b.target.colwise().squaredNorm().mean();
  CHECK(dsm_loss(network_batch_score(net), b) == doctest::Approx(want).epsilon(1e-12));
  // E|eps|^2 / sigma^2 = d / sigma^2 on average
  double expect = 0.0;
  for (int t : b.t) expect += 2.0 / (net.schedule().sigma_at(t) * net.schedule().sigma_at(t));
  expect /= static_cast<double>(b.t.size());
  CHECK(want == doctest::Approx(expect).epsilon(0.03));
  // the variance weighting turns that into E|eps|^2 = d
  CHECK(dsm_loss(network_batch_score(net), b, DsmWeighting::NoiseVariance) == doctest::Approx(2.0).epsilon(0.03));
}

TEST_CASE("loss does not depend on sample order") {
  const MlpScoreNet net = small_net(ScheduleKind::VP, Activation::SiLU);
  GaussianRng rng(10);
  const DsmBatch b = make_dsm_batch(sample_gmm(make_toy_gmm(), 50, 11), net.schedule(), rng);
  std::vector<int> perm(50);
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  DsmBatch p = b;
  for (int i = 0; i < 50; ++i) {
    p.input.col(i) = b.input.col(perm[i]);
    p.cond[i] = b.cond[perm[i]];
    p.target.col(i) = b.target.col(perm[i]);
    p.variance[i] = b.variance[perm[i]];
    p.t[i] = b.t[perm[i]];
  }
  CHECK(dsm_loss(network_batch_score(net), p) == doctest::Approx(dsm_loss(network_batch_score(net), b)).epsilon(1e-13));
}

TEST_CASE("analytic scores sit at the loss floor") {
  const GmmPrior prior = make_toy_gmm();
  const NoiseSchedule s = toy_vp_schedule();
  GaussianRng rng(12);
  const DsmBatch b = make_dsm_batch(sample_gmm(prior, 20000, 13), s, rng);
  MlpScoreNet net = small_net(ScheduleKind::VP, Activation::SiLU);
  CHECK(dsm_loss(analytic_batch_score(prior, s), b) < dsm_loss(network_batch_score(net), b));
}

TEST_CASE("checkpoint round trip") {
  const MlpScoreNet net = small_net(ScheduleKind::VE, Activation::SiLU);
  const auto dir = testing::scratch("ckpt");
  save_checkpoint(net, dir / "n.ckpt");
  const MlpScoreNet r = load_checkpoint(dir / "n.ckpt");
  CHECK(r.parameters() == net.parameters());
  CHECK(r.widths() == net.widths());
  CHECK(r.activation() == net.activation());
  CHECK(r.convention() == net.convention());
  CHECK(r.schedule().sigmas() == net.schedule().sigmas());
  std::ofstream(dir / "bad.ckpt") << "not a checkpoint\n";
  CHECK_THROWS_AS(load_checkpoint(dir / "bad.ckpt"), IoError);
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.ckpt"), IoError);
}

TEST_CASE("network construction checks") {
  CHECK_THROWS_AS(MlpScoreNet(2, {8}, Activation::SiLU, Convention::VE, toy_vp_schedule()), ConfigError);
  CHECK_THROWS_AS(MlpScoreNet(2, {8}, Activation::SiLU, Convention::NoiseLevelDirect, toy_ve_schedule()), ConfigError);
  CHECK_THROWS_AS(MlpScoreNet(2, {0}, Activation::SiLU, Convention::VE, toy_ve_schedule()), ParameterError);
  MlpScoreNet net = small_net(ScheduleKind::VE, Activation::SiLU);
  CHECK_THROWS_AS(net.set_parameters(Vec::Zero(3)), DimensionError);
  const MlpScore s(std::make_shared<MlpScoreNet>(net));
  CHECK_THROWS_AS(s.evaluate(ImageTensor::from_vector(Vec::Zero(2)), 1.5), ConditionError);
  CHECK_THROWS_AS(s.evaluate(ImageTensor::from_vector(Vec::Zero(3)), 1.0), DimensionError);
}

TEST_CASE("training is reproducible from the seed") {
  const Mat samples = sample_gmm(make_toy_gmm(), 10000, 7);
  const DsmTrainConfig c = quick_config();
  const TrainResult a = train_toy_score(samples, toy_vp_schedule(), c);
  const TrainResult b = train_toy_score(samples, toy_vp_schedule(), c);
  CHECK(a.net->parameters() == b.net->parameters());
  CHECK(a.loss_history == b.loss_history);
  CHECK(a.loss_history.size() == 300);
  DsmTrainConfig other = c;
  other.seed = 1;
  CHECK(train_toy_score(samples, toy_vp_schedule(), other).net->parameters() != a.net->parameters());
}

TEST_CASE("training input checks and divergence") {
  const Mat few = sample_gmm(make_toy_gmm(), 100, 7);
  CHECK_THROWS_AS(train_toy_score(few, toy_vp_schedule(), quick_config()), ParameterError);
  const Mat samples = sample_gmm(make_toy_gmm(), 10000, 7);
  DsmTrainConfig c = quick_config();
  c.learning_rate = 1e8;
  CHECK_THROWS_AS(train_toy_score(samples, toy_ve_schedule(), c), TrainingError);
  c = quick_config();
  c.momentum = 1.0;
  CHECK_THROWS_AS(c.validate(), ParameterError);
  const DsmTrainConfig r = DsmTrainConfig::from_json(quick_config().to_json());
  CHECK(r.to_json() == quick_config().to_json());
  CHECK_THROWS_AS(DsmTrainConfig::from_json({{"decay", "cosine"}}), ConfigError);
}

TEST_CASE("a trained network drives a plug-and-play solver") {
  const GmmPrior prior = make_toy_gmm();
  const Mat samples = sample_gmm(prior, 20000, 7);
  DsmTrainConfig c = toy_training_config(ScheduleKind::VP);
  c.steps = 1500;
  c.batch_size = 256;
  const TrainResult res = train_toy_score(samples, toy_vp_schedule(), c);
  CHECK(res.loss_history.back() < res.loss_history.front());

  AdaptOptions lenient;
  lenient.range = RangePolicy::Lenient;
  const AdaptedDenoiser den(std::make_shared<MlpScore>(res.net), lenient);
  // noisy observation of a point near the right mode, identity operator
  Vec y(2);
  y << 1.7, -0.3;
  const QuadraticDataTerm dt(LinearOperator::identity(), ImageTensor::from_vector(y));
  SolverConfig sc = default_config(Method::PnpAdmm);
  sc.K = 30;
  sc.gamma = 1.0;
  sc.gamma_rule = GammaRule::Constant;
  sc.sigma1 = sc.sigmaK = 0.3;
  const SolverState st = pnp_admm(dt, den, sc);
  const Vec x = st.reconstruction().data();
  CHECK(x.allFinite());
  // pulled from y toward the mode at (1.5, 0)
  const Eigen::Vector2d mode(1.5, 0.0);
  CHECK((x - mode).norm() < (y - mode).norm());
}
