#pragma once

#include "spnp/image.hpp"
#include "spnp/schedule.hpp"
#include "spnp/score_function.hpp"

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace spnp {

enum class Activation { SiLU, Tanh };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view s);

/// Fully connected score network s(x, cond) : R^d x R -> R^d.
///
/// The conditioning scalar is appended to the input: log sigma_t for VE
/// networks, t / T for VP networks. Parameters are stored layer by layer,
/// each weight matrix column-major (out x in) followed by its bias.
class MlpScoreNet {
 public:
  /// `hidden` widths between the (dim + 1)-wide input and dim-wide output.
  MlpScoreNet(int dim, std::vector<int> hidden, Activation act, Convention convention, NoiseSchedule schedule);

  [[nodiscard]] int dim() const { return dim_; }
  [[nodiscard]] const std::vector<int>& widths() const { return widths_; }
  [[nodiscard]] Activation activation() const { return act_; }
  [[nodiscard]] Convention convention() const { return convention_; }
  [[nodiscard]] const NoiseSchedule& schedule() const { return schedule_; }

  [[nodiscard]] Eigen::Index parameter_count() const { return params_.size(); }
  [[nodiscard]] const Vec& parameters() const { return params_; }
  void set_parameters(const Vec& p);

  /// Default init: every weight and bias uniform in +-1/sqrt(fan_in).
  void initialize(std::uint64_t seed);

  /// Conditioning scalar for a time value in the network's convention.
  [[nodiscard]] double condition_of(double t) const;

  /// Columns of X are points, cond holds one conditioning scalar per column.
  [[nodiscard]] Mat forward(const Mat& X, const Eigen::RowVectorXd& cond) const;

  /// mean_i w_i |s(X_i, cond_i) - target_i|^2 and, if grad is given, its
  /// gradient with respect to the parameters.
  double loss_and_gradient(const Mat& X, const Eigen::RowVectorXd& cond, const Mat& target,
                           const Eigen::RowVectorXd& weight, Vec* grad) const;

 private:
  struct Layer {
    Eigen::Index offset;
    int in;
    int out;
  };

  int dim_;
  std::vector<int> widths_;  // full list: dim + 1, hidden..., dim
  Activation act_;
  Convention convention_;
  NoiseSchedule schedule_;
  std::vector<Layer> layers_;
  Vec params_;
};

/// ScoreFunction view of a trained network. VE networks accept grid times
/// only; VP networks accept real t in [0, T].
class MlpScore final : public ScoreFunction {
 public:
  explicit MlpScore(std::shared_ptr<const MlpScoreNet> net);
  [[nodiscard]] Convention convention() const override { return net_->convention(); }
  [[nodiscard]] const NoiseSchedule* schedule() const override { return &net_->schedule(); }
  [[nodiscard]] ImageTensor evaluate(const ImageTensor& x, double t) const override;
  [[nodiscard]] std::string describe() const override;

 private:
  std::shared_ptr<const MlpScoreNet> net_;
};

/// Checkpoint: "SPNP-MLP v1\n", one JSON header line, then the parameters
/// as little-endian float64.
void save_checkpoint(const MlpScoreNet& net, const std::filesystem::path& path);
MlpScoreNet load_checkpoint(const std::filesystem::path& path);

}  // namespace spnp
