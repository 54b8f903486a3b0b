#include "spnp/adaptation.hpp"

#include "spnp/errors.hpp"

#include <fmt/format.h>

#include <cmath>

namespace spnp {

namespace {

void check_scale(double c, double sigma) {
  if (!(c > 0.0) || !std::isfinite(c)) throw ParameterError("Tweedie scale c must be positive");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ParameterError("Tweedie sigma must be nonnegative");
}

const NoiseSchedule& require_schedule(const ScoreFunction& s, ScheduleKind kind) {
  const NoiseSchedule* sched = s.schedule();
  if (!sched) throw ConfigError(fmt::format("{} score without a schedule", to_string(s.convention())));
  if (sched->kind() != kind) {
    throw ConfigError(fmt::format("{} score carries a {} schedule", to_string(s.convention()), to_string(sched->kind())));
  }
  return *sched;
}

MatchOptions match_options(const AdaptOptions& o) { return MatchOptions{o.t_prime, o.range, o.interp}; }

}  // namespace

ImageTensor tweedie_denoise_at(const ScoreFunction& score, const ImageTensor& x, double c, double sigma,
                               double condition) {
  check_scale(c, sigma);
  if (sigma == 0.0) return x;
  const ImageTensor s = score.evaluate(c * x, condition);
  if (s.shape() != x.shape()) {
    throw DimensionError(fmt::format("score output {} differs from input {}", s.shape().str(), x.shape().str()));
  }
  if (!s.all_finite()) {
    throw NumericError(fmt::format("non-finite score from {} at condition {} (c={}, sigma={})", score.describe(),
                                   condition, c, sigma));
  }
  return x + (c * sigma * sigma) * s;
}

ImageTensor tweedie_denoise(const ScoreFunction& score, const ImageTensor& x, double c, double sigma) {
  if (score.convention() != Convention::NoiseLevelDirect) {
    throw ConfigError("tweedie_denoise needs a score conditioned directly on sigma");
  }
  return tweedie_denoise_at(score, x, c, sigma, sigma);
}

LevelDenoiser::LevelDenoiser(ScorePtr score, ParamMatch match) : score_(std::move(score)), match_(match) {
  if (!score_) throw ParameterError("null score function");
}

ImageTensor LevelDenoiser::operator()(const ImageTensor& x) const {
  return tweedie_denoise_at(*score_, x, match_.c, match_.sigma_achieved, match_.t_cond);
}

LevelDenoiser adapt_ve(ScorePtr score, double sigma, const AdaptOptions& options) {
  if (!score || score->convention() != Convention::VE) throw ConfigError("adapt_ve needs a VE score");
  const NoiseSchedule& sched = require_schedule(*score, ScheduleKind::VE);
  return LevelDenoiser(std::move(score), param_matching(sched, sigma, match_options(options)));
}

LevelDenoiser adapt_vp(ScorePtr score, double sigma, const AdaptOptions& options) {
  if (!score || score->convention() != Convention::VP) throw ConfigError("adapt_vp needs a VP score");
  const NoiseSchedule& sched = require_schedule(*score, ScheduleKind::VP);
  return LevelDenoiser(std::move(score), param_matching(sched, sigma, match_options(options)));
}

AdaptedDenoiser::AdaptedDenoiser(ScorePtr score, AdaptOptions options)
    : score_(std::move(score)), options_(options) {
  if (!score_) throw ParameterError("null score function");
  switch (score_->convention()) {
    case Convention::VE:
      require_schedule(*score_, ScheduleKind::VE);
      break;
    case Convention::VP:
      require_schedule(*score_, ScheduleKind::VP);
      break;
    case Convention::NoiseLevelDirect:
      break;
  }
}

ParamMatch AdaptedDenoiser::match(double sigma) const {
  if (score_->convention() == Convention::NoiseLevelDirect) {
    ParamMatch m;
    m.c = 1.0;
    m.t_cond = sigma;
    m.sigma_achieved = sigma;
    m.sigma_requested = sigma;
    return m;
  }
  return param_matching(*score_->schedule(), sigma, match_options(options_));
}

ImageTensor AdaptedDenoiser::denoise_native(const ImageTensor& x, double sigma) const {
  if (sigma == 0.0) return x;
  const ParamMatch m = match(sigma);
  return tweedie_denoise_at(*score_, x, m.c, m.sigma_achieved, m.t_cond);
}

ImageTensor AdaptedDenoiser::denoise(const ImageTensor& x, double sigma) const {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ParameterError("denoiser sigma must be nonnegative");
  if (sigma == 0.0) return x;
  if (score_->value_domain() == ValueDomain::Unit) return denoise_native(x, sigma);
  ImageTensor u = 2.0 * x;
  u.data().array() -= 1.0;
  ImageTensor d = denoise_native(u, 2.0 * sigma);
  d.data().array() += 1.0;
  return 0.5 * d;
}

std::string AdaptedDenoiser::describe() const {
  return fmt::format("adapted[{}]({})", to_string(score_->convention()), score_->describe());
}

MmseDenoiser::MmseDenoiser(PriorPtr prior) : prior_(std::move(prior)) {
  if (!prior_) throw ParameterError("null prior");
}

ImageTensor MmseDenoiser::denoise(const ImageTensor& x, double sigma) const {
  if (sigma == 0.0) return x;
  return prior_->mmse(x, sigma);
}

std::string MmseDenoiser::describe() const { return "mmse:" + prior_->describe(); }

}  // namespace spnp
