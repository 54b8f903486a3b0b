#pragma once

#include "spnp/image.hpp"
#include "spnp/rng.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace spnp {

/// Isotropic Gaussian N(mean, std^2 I).
struct GaussianPrior {
  Vec mean;
  double std = 1.0;

  GaussianPrior(Vec mean, double std);
  [[nodiscard]] int dim() const { return static_cast<int>(mean.size()); }
};

/// Score of the noise-perturbed density N(mean, (std^2 + sigma^2) I).
Vec gaussian_score(const GaussianPrior& prior, const Vec& x, double sigma);
Vec gaussian_mmse_denoise(const GaussianPrior& prior, const Vec& x, double sigma);
double gaussian_log_density(const GaussianPrior& prior, const Vec& x, double sigma);

/// Gaussian mixture sum_i w_i N(mu_i, Sigma_i).
///
/// Each covariance is eigendecomposed once so perturbed inverses
/// (Sigma_i + sigma^2 I)^-1 cost one scaling per noise level.
class GmmPrior {
 public:
  struct Component {
    double weight = 0.0;
    Vec mean;
    Mat cov;
  };

  explicit GmmPrior(std::vector<Component> components);
  static GmmPrior isotropic(const std::vector<double>& weights, const std::vector<Vec>& means,
                            const std::vector<double>& stds);
  static GmmPrior from_gaussian(const GaussianPrior& g);

  [[nodiscard]] int dim() const { return dim_; }
  [[nodiscard]] std::size_t size() const { return comps_.size(); }
  [[nodiscard]] const std::vector<Component>& components() const { return comps_; }

  /// Batched evaluation on the columns of X (dim x N). Any output pointer may
  /// be null. `resp` receives the K x N responsibilities.
  void evaluate(const Mat& X, double sigma, Mat* score, Mat* mmse, Mat* resp = nullptr,
                Eigen::VectorXd* log_density = nullptr) const;

  [[nodiscard]] Vec score(const Vec& x, double sigma) const;
  [[nodiscard]] Vec mmse(const Vec& x, double sigma) const;
  [[nodiscard]] Vec responsibilities(const Vec& x, double sigma) const;
  [[nodiscard]] double log_density(const Vec& x, double sigma) const;

  [[nodiscard]] Vec sample(GaussianRng& rng) const;

  [[nodiscard]] nlohmann::json to_json() const;
  static GmmPrior from_json(const nlohmann::json& j);

 private:
  struct Factor {
    Mat U;        // eigenvectors
    Vec lambda;   // eigenvalues
    Mat chol;     // lower Cholesky factor of Sigma, for sampling
  };

  int dim_ = 0;
  std::vector<Component> comps_;
  std::vector<Factor> factors_;
};

Vec gmm_score(const GmmPrior& prior, const Vec& x, double sigma);
Vec gmm_mmse_denoise(const GmmPrior& prior, const Vec& x, double sigma);

GmmPrior load_gmm(const std::filesystem::path& path);
void save_gmm(const GmmPrior& prior, const std::filesystem::path& path);

/// Analytic prior over whole images: exact noisy score and MMSE denoiser.
class AnalyticPrior {
 public:
  virtual ~AnalyticPrior() = default;
  [[nodiscard]] virtual ImageTensor score(const ImageTensor& x, double sigma) const = 0;
  [[nodiscard]] virtual ImageTensor mmse(const ImageTensor& x, double sigma) const = 0;
  [[nodiscard]] virtual std::string describe() const = 0;
};

/// Gaussian prior over the flattened image.
class GaussianImagePrior final : public AnalyticPrior {
 public:
  explicit GaussianImagePrior(GaussianPrior prior) : prior_(std::move(prior)) {}
  [[nodiscard]] ImageTensor score(const ImageTensor& x, double sigma) const override;
  [[nodiscard]] ImageTensor mmse(const ImageTensor& x, double sigma) const override;
  [[nodiscard]] std::string describe() const override;
  [[nodiscard]] const GaussianPrior& prior() const { return prior_; }

 private:
  GaussianPrior prior_;
};

/// GMM over the flattened image.
class GmmImagePrior final : public AnalyticPrior {
 public:
  explicit GmmImagePrior(GmmPrior prior) : prior_(std::move(prior)) {}
  [[nodiscard]] ImageTensor score(const ImageTensor& x, double sigma) const override;
  [[nodiscard]] ImageTensor mmse(const ImageTensor& x, double sigma) const override;
  [[nodiscard]] std::string describe() const override;
  [[nodiscard]] const GmmPrior& prior() const { return prior_; }

 private:
  GmmPrior prior_;
};

/// GMM over ph x pw x C patches lifted to images: every periodic patch
/// position (unit stride) contributes its patch score / posterior mean and
/// each pixel averages the ph*pw patches covering it. Patch vectors are laid
/// out channel-major, then row, then column.
///
/// This is a desk-scale stand-in for a whole-image prior. The lifted score is
/// not the score of a normalized image density, but since both outputs are
/// averaged the same way, mmse(x) - x == sigma^2 score(x) still holds.
class PatchGmmPrior final : public AnalyticPrior {
 public:
  PatchGmmPrior(GmmPrior prior, int patch_h, int patch_w, int channels);

  [[nodiscard]] ImageTensor score(const ImageTensor& x, double sigma) const override;
  [[nodiscard]] ImageTensor mmse(const ImageTensor& x, double sigma) const override;
  [[nodiscard]] std::string describe() const override;

  /// Image built from independent non-overlapping patch draws. H and W must
  /// be multiples of the patch size.
  [[nodiscard]] ImageTensor sample_image(const Shape& shape, GaussianRng& rng) const;

  [[nodiscard]] const GmmPrior& prior() const { return prior_; }
  [[nodiscard]] int patch_h() const { return ph_; }
  [[nodiscard]] int patch_w() const { return pw_; }

 private:
  void check(const ImageTensor& x) const;
  Mat gather(const ImageTensor& x) const;
  ImageTensor scatter_mean(const Mat& patches, const Shape& shape) const;

  GmmPrior prior_;
  int ph_;
  int pw_;
  int channels_;
};

/// Smooth patch prior used for synthetic experiments: components with
/// covariance amp^2 * exp(-|p - q|^2 / (2 ell^2)) + floor^2 I over patch
/// pixel positions, means drawn uniformly in [lo, hi] per component.
GmmPrior make_smooth_patch_gmm(int patch_h, int patch_w, int channels, int components, double amplitude,
                               double length_scale, double floor_std, double mean_lo, double mean_hi,
                               std::uint64_t seed);

}  // namespace spnp
