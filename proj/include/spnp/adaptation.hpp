#pragma once

#include "spnp/image.hpp"
#include "spnp/priors.hpp"
#include "spnp/schedule.hpp"
#include "spnp/score_function.hpp"

#include <memory>
#include <optional>
#include <string>

namespace spnp {

/// Gaussian denoiser D_sigma. sigma == 0 must return x unchanged.
class Denoiser {
 public:
  virtual ~Denoiser() = default;
  [[nodiscard]] virtual ImageTensor denoise(const ImageTensor& x, double sigma) const = 0;
  [[nodiscard]] virtual std::string describe() const = 0;
};

using DenoiserPtr = std::shared_ptr<const Denoiser>;

/// x + c sigma^2 s(c x, sigma) for a score of the scaled noisy variable
/// c (x0 + w), w ~ N(0, sigma^2 I), conditioned directly on sigma.
ImageTensor tweedie_denoise(const ScoreFunction& score, const ImageTensor& x, double c, double sigma);

/// Same template with an explicit conditioning value for the evaluator.
ImageTensor tweedie_denoise_at(const ScoreFunction& score, const ImageTensor& x, double c, double sigma,
                               double condition);

struct AdaptOptions {
  int t_prime = 0;  ///< 0 selects 10 T.
  RangePolicy range = RangePolicy::Strict;
  SigmaInterp interp = SigmaInterp::Linear;
};

/// A denoiser frozen at one noise level: the matched (c, t) plus the score.
class LevelDenoiser {
 public:
  LevelDenoiser(ScorePtr score, ParamMatch match);
  [[nodiscard]] ImageTensor operator()(const ImageTensor& x) const;
  [[nodiscard]] const ParamMatch& match() const { return match_; }

 private:
  ScorePtr score_;
  ParamMatch match_;
};

/// D_sigma(x) = x + sigma_t^2 s(x, t), c = 1.
LevelDenoiser adapt_ve(ScorePtr score, double sigma, const AdaptOptions& options = {});
/// D_sigma(x) = x + ((1 - abar)/sqrt(abar)) s(sqrt(abar) x, t_cond).
LevelDenoiser adapt_vp(ScorePtr score, double sigma, const AdaptOptions& options = {});

/// Turns any ScoreFunction into a Denoiser. VE and VP scores go through
/// param_matching against their own schedule; direct scores use c = 1 and
/// the requested sigma. Scores declared on [-1, 1] are wrapped as
/// D(x, sigma) = (D'(2x - 1, 2 sigma) + 1) / 2.
class AdaptedDenoiser final : public Denoiser {
 public:
  explicit AdaptedDenoiser(ScorePtr score, AdaptOptions options = {});

  [[nodiscard]] ImageTensor denoise(const ImageTensor& x, double sigma) const override;
  [[nodiscard]] std::string describe() const override;

  /// Match used for a request at sigma (in the score's own value domain).
  [[nodiscard]] ParamMatch match(double sigma) const;
  [[nodiscard]] const ScoreFunction& score() const { return *score_; }
  [[nodiscard]] const AdaptOptions& options() const { return options_; }

 private:
  ImageTensor denoise_native(const ImageTensor& x, double sigma) const;

  ScorePtr score_;
  AdaptOptions options_;
};

/// Closed-form posterior mean of an analytic prior.
class MmseDenoiser final : public Denoiser {
 public:
  explicit MmseDenoiser(PriorPtr prior);
  [[nodiscard]] ImageTensor denoise(const ImageTensor& x, double sigma) const override;
  [[nodiscard]] std::string describe() const override;

 private:
  PriorPtr prior_;
};

class IdentityDenoiser final : public Denoiser {
 public:
  [[nodiscard]] ImageTensor denoise(const ImageTensor& x, double) const override { return x; }
  [[nodiscard]] std::string describe() const override { return "identity"; }
};

}  // namespace spnp
