#pragma once

#include "spnp/image.hpp"
#include "spnp/priors.hpp"
#include "spnp/schedule.hpp"

#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace spnp {

/// How the second argument of a score evaluator is to be read.
///   VE:  grid index t in {1..T}; s(x, t) = grad log p_{sigma_t}(x)
///   VP:  time t in [0, T]; s(z, t) is the score of the scaled noisy
///        variable z = sqrt(abar_t) (x0 + sigma_t w)
///   NoiseLevelDirect: the noise level sigma itself
enum class Convention { VE, VP, NoiseLevelDirect };

std::string_view to_string(Convention c);
Convention convention_from_string(std::string_view s);

/// Pixel range the evaluator was trained on.
enum class ValueDomain { Unit, Symmetric };  // [0,1] and [-1,1]

class ScoreFunction {
 public:
  virtual ~ScoreFunction() = default;
  [[nodiscard]] virtual Convention convention() const = 0;
  /// Training schedule; present for VE and VP evaluators.
  [[nodiscard]] virtual const NoiseSchedule* schedule() const { return nullptr; }
  [[nodiscard]] virtual ValueDomain value_domain() const { return ValueDomain::Unit; }
  [[nodiscard]] virtual ImageTensor evaluate(const ImageTensor& x, double condition) const = 0;
  [[nodiscard]] virtual std::string describe() const = 0;
};

using ScorePtr = std::shared_ptr<const ScoreFunction>;
using PriorPtr = std::shared_ptr<const AnalyticPrior>;

/// s(x, sigma) = grad log p_sigma(x) of an analytic prior.
class DirectAnalyticScore final : public ScoreFunction {
 public:
  explicit DirectAnalyticScore(PriorPtr prior);
  [[nodiscard]] Convention convention() const override { return Convention::NoiseLevelDirect; }
  [[nodiscard]] ImageTensor evaluate(const ImageTensor& x, double sigma) const override;
  [[nodiscard]] std::string describe() const override;

 private:
  PriorPtr prior_;
};

/// Score of the scaled variable c (x0 + sigma w) conditioned on sigma:
/// s(z, sigma) = (1/c) grad log p_sigma(z / c).
class ScaledAnalyticScore final : public ScoreFunction {
 public:
  ScaledAnalyticScore(PriorPtr prior, double c);
  [[nodiscard]] Convention convention() const override { return Convention::NoiseLevelDirect; }
  [[nodiscard]] ImageTensor evaluate(const ImageTensor& z, double sigma) const override;
  [[nodiscard]] std::string describe() const override;

 private:
  PriorPtr prior_;
  double c_;
};

/// Analytic stand-in for a VE network; only grid times are accepted.
class VeEmulator final : public ScoreFunction {
 public:
  VeEmulator(PriorPtr prior, NoiseSchedule schedule);
  [[nodiscard]] Convention convention() const override { return Convention::VE; }
  [[nodiscard]] const NoiseSchedule* schedule() const override { return &schedule_; }
  [[nodiscard]] ImageTensor evaluate(const ImageTensor& x, double t) const override;
  [[nodiscard]] std::string describe() const override;

 private:
  PriorPtr prior_;
  NoiseSchedule schedule_;
};

/// Analytic stand-in for a VP network. Real times in [0, T] are accepted;
/// the noise level at fractional t follows the schedule's continuous reading
/// (linear in sigma between grid points), with c = 1/sqrt(1 + sigma^2).
class VpEmulator final : public ScoreFunction {
 public:
  VpEmulator(PriorPtr prior, NoiseSchedule schedule);
  [[nodiscard]] Convention convention() const override { return Convention::VP; }
  [[nodiscard]] const NoiseSchedule* schedule() const override { return &schedule_; }
  [[nodiscard]] ImageTensor evaluate(const ImageTensor& z, double t) const override;
  [[nodiscard]] std::string describe() const override;

 private:
  PriorPtr prior_;
  NoiseSchedule schedule_;
};

/// ConfigError unless the schedule is VE (resp. VP).
ScorePtr emulate_ve_network(PriorPtr prior, const NoiseSchedule& schedule);
ScorePtr emulate_vp_network(PriorPtr prior, const NoiseSchedule& schedule);

/// Applies a score function defined on ph x pw patches to whole images:
/// every periodic unit-stride patch is evaluated and overlaps are averaged.
class PatchLiftedScore final : public ScoreFunction {
 public:
  PatchLiftedScore(ScorePtr inner, int patch_h, int patch_w);
  [[nodiscard]] Convention convention() const override { return inner_->convention(); }
  [[nodiscard]] const NoiseSchedule* schedule() const override { return inner_->schedule(); }
  [[nodiscard]] ValueDomain value_domain() const override { return inner_->value_domain(); }
  [[nodiscard]] ImageTensor evaluate(const ImageTensor& x, double condition) const override;
  [[nodiscard]] std::string describe() const override;

 private:
  ScorePtr inner_;
  int ph_;
  int pw_;
};

}  // namespace spnp
