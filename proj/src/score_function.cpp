#include "spnp/score_function.hpp"

#include "spnp/errors.hpp"

#include <fmt/format.h>

#include <cmath>

namespace spnp {

std::string_view to_string(Convention c) {
  switch (c) {
    case Convention::VE:
      return "VE";
    case Convention::VP:
      return "VP";
    case Convention::NoiseLevelDirect:
      return "direct";
  }
  return "?";
}

Convention convention_from_string(std::string_view s) {
  if (s == "VE" || s == "ve") return Convention::VE;
  if (s == "VP" || s == "vp") return Convention::VP;
  if (s == "direct") return Convention::NoiseLevelDirect;
  throw ConfigError(fmt::format("unknown score convention '{}'", s));
}

namespace {

PriorPtr require_prior(PriorPtr p) {
  if (!p) throw ParameterError("null prior");
  return p;
}

}  // namespace

DirectAnalyticScore::DirectAnalyticScore(PriorPtr prior) : prior_(require_prior(std::move(prior))) {}

ImageTensor DirectAnalyticScore::evaluate(const ImageTensor& x, double sigma) const { return prior_->score(x, sigma); }

std::string DirectAnalyticScore::describe() const { return "direct:" + prior_->describe(); }

ScaledAnalyticScore::ScaledAnalyticScore(PriorPtr prior, double c) : prior_(require_prior(std::move(prior))), c_(c) {
  if (!(c > 0.0) || !std::isfinite(c)) throw ParameterError("scale c must be positive");
}

ImageTensor ScaledAnalyticScore::evaluate(const ImageTensor& z, double sigma) const {
  return (1.0 / c_) * prior_->score((1.0 / c_) * z, sigma);
}

std::string ScaledAnalyticScore::describe() const { return fmt::format("scaled(c={}):{}", c_, prior_->describe()); }

VeEmulator::VeEmulator(PriorPtr prior, NoiseSchedule schedule)
    : prior_(require_prior(std::move(prior))), schedule_(std::move(schedule)) {
  if (schedule_.kind() != ScheduleKind::VE) throw ConfigError("VE emulator needs a VE schedule");
}

ImageTensor VeEmulator::evaluate(const ImageTensor& x, double t) const {
  if (!(t >= 1.0) || t > schedule_.T() || t != std::floor(t)) {
    throw ConditionError(fmt::format("VE emulator accepts grid times 1..{} only, got {}", schedule_.T(), t));
  }
  return prior_->score(x, schedule_.sigma_at(static_cast<int>(t)));
}

std::string VeEmulator::describe() const { return fmt::format("ve-emulator(T={}):{}", schedule_.T(), prior_->describe()); }

VpEmulator::VpEmulator(PriorPtr prior, NoiseSchedule schedule)
    : prior_(require_prior(std::move(prior))), schedule_(std::move(schedule)) {
  if (schedule_.kind() != ScheduleKind::VP) throw ConfigError("VP emulator needs a VP schedule");
}

ImageTensor VpEmulator::evaluate(const ImageTensor& z, double t) const {
  if (!(t >= 0.0) || t > schedule_.T()) {
    throw ConditionError(fmt::format("VP emulator accepts times in [0, {}], got {}", schedule_.T(), t));
  }
  double sigma = 0.0;
  double c = 1.0;
  if (t == std::floor(t) && t >= 1.0) {
    const int k = static_cast<int>(t);
    sigma = schedule_.sigma_at(k);
    c = std::sqrt(schedule_.alpha_bar_at(k));
  } else {
    sigma = schedule_.sigma_continuous(t);
    c = 1.0 / std::sqrt(1.0 + sigma * sigma);
  }
  return (1.0 / c) * prior_->score((1.0 / c) * z, sigma);
}

std::string VpEmulator::describe() const { return fmt::format("vp-emulator(T={}):{}", schedule_.T(), prior_->describe()); }

ScorePtr emulate_ve_network(PriorPtr prior, const NoiseSchedule& schedule) {
  return std::make_shared<VeEmulator>(std::move(prior), schedule);
}

ScorePtr emulate_vp_network(PriorPtr prior, const NoiseSchedule& schedule) {
  return std::make_shared<VpEmulator>(std::move(prior), schedule);
}

PatchLiftedScore::PatchLiftedScore(ScorePtr inner, int patch_h, int patch_w)
    : inner_(std::move(inner)), ph_(patch_h), pw_(patch_w) {
  if (!inner_) throw ParameterError("null score function");
  if (ph_ < 1 || pw_ < 1) throw ParameterError("patch extents must be positive");
}

ImageTensor PatchLiftedScore::evaluate(const ImageTensor& x, double condition) const {
  const int H = x.height();
  const int W = x.width();
  const int C = x.channels();
  if (H < ph_ || W < pw_) throw DimensionError(fmt::format("image {} smaller than {}x{} patch", x.shape().str(), ph_, pw_));
  ImageTensor out(x.shape(), 0.0);
  ImageTensor patch(Shape{ph_, pw_, C});
  for (int i = 0; i < H; ++i) {
    for (int j = 0; j < W; ++j) {
      for (int c = 0; c < C; ++c) {
        for (int a = 0; a < ph_; ++a) {
          for (int b = 0; b < pw_; ++b) patch(c, a, b) = x(c, (i + a) % H, (j + b) % W);
        }
      }
      const ImageTensor s = inner_->evaluate(patch, condition);
      if (s.shape() != patch.shape()) throw DimensionError("patch score changed the patch shape");
      for (int c = 0; c < C; ++c) {
        for (int a = 0; a < ph_; ++a) {
          for (int b = 0; b < pw_; ++b) out(c, (i + a) % H, (j + b) % W) += s(c, a, b);
        }
      }
    }
  }
  out *= 1.0 / (ph_ * pw_);
  return out;
}

std::string PatchLiftedScore::describe() const {
  return fmt::format("patch-lift({}x{}):{}", ph_, pw_, inner_->describe());
}

}  // namespace spnp
