#pragma once

#include "spnp/mlp.hpp"
#include "spnp/priors.hpp"
#include "spnp/rng.hpp"
#include "spnp/schedule.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <vector>

namespace spnp {

/// Per-sample loss weight.
enum class DsmWeighting {
  Unweighted,     ///< plain E |s + eps / std|^2
  NoiseVariance,  ///< multiplied by the noise variance (sigma_t^2 or 1 - abar_t)
};

/// One noisy DSM batch in a network's input space.
struct DsmBatch {
  Mat input;                   ///< noisy points, dim x B
  std::vector<int> t;          ///< grid time of each column
  Eigen::RowVectorXd cond;     ///< network conditioning scalars
  Mat target;                  ///< -eps / noise std
  Eigen::RowVectorXd variance; ///< noise variance of each column
};

/// Draws t uniformly on the grid and eps ~ N(0, I) for every column of
/// `clean`. VE: x + sigma_t eps. VP: sqrt(abar_t) x + sqrt(1 - abar_t) eps.
/// The conditioning row uses log sigma_t (VE) or t / T (VP).
DsmBatch make_dsm_batch(const Mat& clean, const NoiseSchedule& schedule, GaussianRng& rng);

/// Score evaluator on a batch: columns of X at grid times t.
using BatchScore = std::function<Mat(const Mat& X, const std::vector<int>& t)>;

/// Exact scores of an analytic GMM in the schedule's convention.
BatchScore analytic_batch_score(const GmmPrior& prior, const NoiseSchedule& schedule);
BatchScore network_batch_score(const MlpScoreNet& net);

double dsm_loss(const BatchScore& score, const DsmBatch& batch, DsmWeighting weighting = DsmWeighting::Unweighted);
double dsm_loss(const MlpScoreNet& net, const Mat& clean, const NoiseSchedule& schedule, GaussianRng& rng,
                DsmWeighting weighting = DsmWeighting::Unweighted);

enum class LrDecay { None, Linear };

struct DsmTrainConfig {
  int steps = 20000;
  int batch_size = 512;
  double learning_rate = 0.05;
  double momentum = 0.0;
  LrDecay decay = LrDecay::None;
  DsmWeighting weighting = DsmWeighting::NoiseVariance;
  std::vector<int> hidden = {64, 64};
  Activation activation = Activation::SiLU;
  std::uint64_t seed = 0;
  int log_every = 0;  ///< 0 disables progress logging

  void validate() const;
  [[nodiscard]] nlohmann::json to_json() const;
  static DsmTrainConfig from_json(const nlohmann::json& j);
};

/// Settings used for the toy problems: momentum 0.9 with linear decay.
/// VE trains a SiLU net for 40000 steps, VP a tanh net for 20000.
DsmTrainConfig toy_training_config(ScheduleKind kind);

struct TrainResult {
  std::shared_ptr<MlpScoreNet> net;
  std::vector<double> loss_history;  ///< training objective per step
};

/// SGD (optionally with momentum and linear step decay) on DSM. `samples`
/// holds one clean point per column and needs at least 1e4 columns. The
/// network convention follows the schedule kind. TrainingError on a
/// non-finite loss, naming the step.
TrainResult train_toy_score(const Mat& samples, const NoiseSchedule& schedule, const DsmTrainConfig& config);

/// Max relative error between backpropagated parameter gradients of the
/// loss on `batch` and central differences with step h. Components are
/// compared relative to max(|analytic|, |numeric|, 1e-3 max|analytic|).
double grad_check(const MlpScoreNet& net, const DsmBatch& batch, DsmWeighting weighting = DsmWeighting::Unweighted,
                  double h = 1e-5);

/// The 2-D two-component mixture used by the toy experiments: equal weights,
/// means (+-separation, 0), isotropic std.
GmmPrior make_toy_gmm(double separation = 1.5, double std = 0.5);
Mat sample_gmm(const GmmPrior& prior, int n, std::uint64_t seed);

/// VE geometric levels and the VP schedule with the same sigma_t.
NoiseSchedule toy_ve_schedule();
NoiseSchedule toy_vp_schedule();

struct ToyDenoiseReport {
  std::vector<double> sigmas;      ///< grid levels evaluated
  std::vector<double> mean_error;  ///< mean |D - D_mmse| / std per level
  [[nodiscard]] double max_error() const;
};

/// Compares two denoisers on a held-out grid covering the mixture
/// (21 x 11 points over [-s - 2 std, s + 2 std] x [-2 std, 2 std]) at each
/// listed noise level.
ToyDenoiseReport compare_on_grid(const std::function<Vec(const Vec&, double)>& a,
                                 const std::function<Vec(const Vec&, double)>& b, const std::vector<double>& sigmas,
                                 double separation, double std);

}  // namespace spnp
