#include "spnp/dsm.hpp"

#include "spnp/errors.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>

namespace spnp {

DsmBatch make_dsm_batch(const Mat& clean, const NoiseSchedule& schedule, GaussianRng& rng) {
  const Eigen::Index d = clean.rows();
  const Eigen::Index B = clean.cols();
  if (B == 0) throw ParameterError("empty DSM batch");
  const int T = schedule.T();
  const bool vp = schedule.kind() == ScheduleKind::VP;
  DsmBatch b;
  b.input.resize(d, B);
  b.target.resize(d, B);
  b.cond.resize(B);
  b.variance.resize(B);
  b.t.resize(static_cast<std::size_t>(B));
  for (Eigen::Index i = 0; i < B; ++i) {
    const int t = static_cast<int>(rng.index(static_cast<std::uint64_t>(T))) + 1;
    b.t[i] = t;
    const double sigma = schedule.sigma_at(t);
    double scale = 1.0;
    double noise_std = sigma;
    if (vp) {
      const double abar = schedule.alpha_bar_at(t);
      scale = std::sqrt(abar);
      noise_std = std::sqrt(1.0 - abar);
      b.cond[i] = static_cast<double>(t) / T;
    } else {
      b.cond[i] = std::log(sigma);
    }
    for (Eigen::Index k = 0; k < d; ++k) {
      const double e = rng.normal();
      b.input(k, i) = scale * clean(k, i) + noise_std * e;
      b.target(k, i) = -e / noise_std;
    }
    b.variance[i] = noise_std * noise_std;
  }
  return b;
}

BatchScore analytic_batch_score(const GmmPrior& prior, const NoiseSchedule& schedule) {
  return [prior, schedule](const Mat& X, const std::vector<int>& t) {
    Mat out(X.rows(), X.cols());
    const bool vp = schedule.kind() == ScheduleKind::VP;
    for (int level = 1; level <= schedule.T(); ++level) {
      std::vector<Eigen::Index> cols;
      for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] == level) cols.push_back(static_cast<Eigen::Index>(i));
      }
      if (cols.empty()) continue;
      const double c = vp ? std::sqrt(schedule.alpha_bar_at(level)) : 1.0;
      Mat sub(X.rows(), static_cast<Eigen::Index>(cols.size()));
      for (std::size_t j = 0; j < cols.size(); ++j) sub.col(static_cast<Eigen::Index>(j)) = X.col(cols[j]) / c;
      Mat s;
      prior.evaluate(sub, schedule.sigma_at(level), &s, nullptr);
      for (std::size_t j = 0; j < cols.size(); ++j) out.col(cols[j]) = s.col(static_cast<Eigen::Index>(j)) / c;
    }
    return out;
  };
}

BatchScore network_batch_score(const MlpScoreNet& net) {
  return [&net](const Mat& X, const std::vector<int>& t) {
    Eigen::RowVectorXd cond(X.cols());
    for (Eigen::Index i = 0; i < X.cols(); ++i) cond[i] = net.condition_of(t[static_cast<std::size_t>(i)]);
    return net.forward(X, cond);
  };
}

namespace {

Eigen::RowVectorXd weights_for(const DsmBatch& b, DsmWeighting w) {
  if (w == DsmWeighting::NoiseVariance) return b.variance;
  return Eigen::RowVectorXd::Ones(b.variance.size());
}

}  // namespace

double dsm_loss(const BatchScore& score, const DsmBatch& batch, DsmWeighting weighting) {
  const Mat s = score(batch.input, batch.t);
  const Eigen::RowVectorXd per = (s - batch.target).array().square().colwise().sum();
  return (per.array() * weights_for(batch, weighting).array()).mean();
}

double dsm_loss(const MlpScoreNet& net, const Mat& clean, const NoiseSchedule& schedule, GaussianRng& rng,
                DsmWeighting weighting) {
  const DsmBatch b = make_dsm_batch(clean, schedule, rng);
  return net.loss_and_gradient(b.input, b.cond, b.target, weights_for(b, weighting), nullptr);
}

void DsmTrainConfig::validate() const {
  if (steps < 1 || batch_size < 1) throw ParameterError("training steps and batch size must be positive");
  if (!(learning_rate > 0.0)) throw ParameterError("learning rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ParameterError("momentum must lie in [0, 1)");
  if (hidden.empty()) throw ParameterError("need at least one hidden layer");
}

nlohmann::json DsmTrainConfig::to_json() const {
  return nlohmann::json{{"steps", steps},
                        {"batch_size", batch_size},
                        {"learning_rate", learning_rate},
                        {"momentum", momentum},
                        {"decay", decay == LrDecay::Linear ? "linear" : "none"},
                        {"weighting", weighting == DsmWeighting::NoiseVariance ? "noise-variance" : "none"},
                        {"hidden", hidden},
                        {"activation", std::string(to_string(activation))},
                        {"seed", seed},
                        {"log_every", log_every}};
}

DsmTrainConfig DsmTrainConfig::from_json(const nlohmann::json& j) {
  DsmTrainConfig c;
  try {
    c.steps = j.value("steps", c.steps);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.momentum = j.value("momentum", c.momentum);
    const std::string decay = j.value("decay", std::string("none"));
    if (decay == "linear") {
      c.decay = LrDecay::Linear;
    } else if (decay != "none") {
      throw ConfigError("unknown learning-rate decay '" + decay + "'");
    }
    const std::string w = j.value("weighting", std::string("noise-variance"));
    if (w == "none") {
      c.weighting = DsmWeighting::Unweighted;
    } else if (w != "noise-variance") {
      throw ConfigError("unknown loss weighting '" + w + "'");
    }
    c.hidden = j.value("hidden", c.hidden);
    c.activation = activation_from_string(j.value("activation", std::string("silu")));
    c.seed = j.value("seed", c.seed);
    c.log_every = j.value("log_every", c.log_every);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed training config: ") + e.what());
  }
  c.validate();
  return c;
}

DsmTrainConfig toy_training_config(ScheduleKind kind) {
  DsmTrainConfig c;
  c.momentum = 0.9;
  c.decay = LrDecay::Linear;
  if (kind == ScheduleKind::VE) {
    c.steps = 40000;
  } else {
    c.activation = Activation::Tanh;
  }
  return c;
}

TrainResult train_toy_score(const Mat& samples, const NoiseSchedule& schedule, const DsmTrainConfig& config) {
  config.validate();
  if (samples.cols() < 10000) {
    throw ParameterError(fmt::format("training needs at least 1e4 samples, got {}", samples.cols()));
  }
  const Convention conv = schedule.kind() == ScheduleKind::VE ? Convention::VE : Convention::VP;
  auto net = std::make_shared<MlpScoreNet>(static_cast<int>(samples.rows()), config.hidden, config.activation, conv,
                                           schedule);
  net->initialize(derive_seed(config.seed, 1));
  GaussianRng rng(derive_seed(config.seed, 2));

  TrainResult result;
  result.loss_history.reserve(static_cast<std::size_t>(config.steps));
  Vec params = net->parameters();
  Vec velocity = Vec::Zero(params.size());
  Vec grad;
  const auto N = static_cast<std::uint64_t>(samples.cols());
  Mat clean(samples.rows(), config.batch_size);
  for (int step = 0; step < config.steps; ++step) {
    for (int i = 0; i < config.batch_size; ++i) clean.col(i) = samples.col(static_cast<Eigen::Index>(rng.index(N)));
    const DsmBatch b = make_dsm_batch(clean, schedule, rng);
    const double loss = net->loss_and_gradient(b.input, b.cond, b.target, weights_for(b, config.weighting), &grad);
    if (!std::isfinite(loss) || !grad.allFinite()) {
      throw TrainingError(fmt::format("training diverged at step {} (loss {})", step, loss));
    }
    result.loss_history.push_back(loss);
    const double lr = config.decay == LrDecay::Linear
                          ? config.learning_rate * (1.0 - static_cast<double>(step) / config.steps)
                          : config.learning_rate;
    if (config.momentum > 0.0) {
      velocity = config.momentum * velocity + grad;
      params -= lr * velocity;
    } else {
      params -= lr * grad;
    }
    net->set_parameters(params);
    if (config.log_every > 0 && (step + 1) % config.log_every == 0) {
      spdlog::info("step {} loss {:.6f} lr {:.4g}", step + 1, loss, lr);
    }
  }
  result.net = std::move(net);
  return result;
}

double grad_check(const MlpScoreNet& net, const DsmBatch& batch, DsmWeighting weighting, double h) {
  const Eigen::RowVectorXd w = weights_for(batch, weighting);
  Vec g;
  net.loss_and_gradient(batch.input, batch.cond, batch.target, w, &g);
  MlpScoreNet probe = net;
  Vec p = net.parameters();
  const double floor = 1e-3 * g.cwiseAbs().maxCoeff();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double orig = p[i];
    p[i] = orig + h;
    probe.set_parameters(p);
    const double up = probe.loss_and_gradient(batch.input, batch.cond, batch.target, w, nullptr);
    p[i] = orig - h;
    probe.set_parameters(p);
    const double down = probe.loss_and_gradient(batch.input, batch.cond, batch.target, w, nullptr);
    p[i] = orig;
    const double num = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(g[i]), std::abs(num), floor});
    if (denom > 0.0) worst = std::max(worst, std::abs(g[i] - num) / denom);
  }
  return worst;
}

GmmPrior make_toy_gmm(double separation, double std) {
  Vec a(2);
  a << separation, 0.0;
  return GmmPrior::isotropic({0.5, 0.5}, {a, -a}, {std, std});
}

Mat sample_gmm(const GmmPrior& prior, int n, std::uint64_t seed) {
  GaussianRng rng(seed);
  Mat out(prior.dim(), n);
  for (int i = 0; i < n; ++i) out.col(i) = prior.sample(rng);
  return out;
}

NoiseSchedule toy_ve_schedule() { return NoiseSchedule::ve_geometric(0.1, 2.0, 12); }

NoiseSchedule toy_vp_schedule() { return NoiseSchedule::vp_from_sigmas(toy_ve_schedule().sigmas()); }

double ToyDenoiseReport::max_error() const {
  return mean_error.empty() ? 0.0 : *std::max_element(mean_error.begin(), mean_error.end());
}

ToyDenoiseReport compare_on_grid(const std::function<Vec(const Vec&, double)>& a,
                                 const std::function<Vec(const Vec&, double)>& b, const std::vector<double>& sigmas,
                                 double separation, double std) {
  ToyDenoiseReport rep;
  const int nx = 21;
  const int ny = 11;
  for (double sigma : sigmas) {
    double total = 0.0;
    for (int i = 0; i < nx; ++i) {
      for (int j = 0; j < ny; ++j) {
        Vec p(2);
        p << -separation - 2 * std + (2 * separation + 4 * std) * i / (nx - 1), -2 * std + 4 * std * j / (ny - 1);
        total += (a(p, sigma) - b(p, sigma)).norm();
      }
    }
    rep.sigmas.push_back(sigma);
    rep.mean_error.push_back(total / (nx * ny) / std);
  }
  return rep;
}

}  // namespace spnp
