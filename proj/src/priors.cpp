#include "spnp/priors.hpp"

#include "spnp/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <numbers>

namespace spnp {

namespace {

void check_sigma(double sigma) {
  if (!std::isfinite(sigma) || sigma < 0.0) throw ParameterError("noise level must be finite and nonnegative");
}

void check_dim(Eigen::Index got, int want, const char* what) {
  if (got != want) throw DimensionError(fmt::format("{}: input dimension {} does not match prior dimension {}", what, got, want));
}

}  // namespace

GaussianPrior::GaussianPrior(Vec m, double s) : mean(std::move(m)), std(s) {
  if (mean.size() < 1) throw ParameterError("Gaussian prior needs dimension >= 1");
  if (!(std > 0.0) || !std::isfinite(std)) throw ParameterError("Gaussian prior std must be positive");
  if (!mean.allFinite()) throw ParameterError("Gaussian prior mean must be finite");
}

Vec gaussian_score(const GaussianPrior& prior, const Vec& x, double sigma) {
  check_sigma(sigma);
  check_dim(x.size(), prior.dim(), "gaussian_score");
  return (prior.mean - x) / (prior.std * prior.std + sigma * sigma);
}

Vec gaussian_mmse_denoise(const GaussianPrior& prior, const Vec& x, double sigma) {
  check_sigma(sigma);
  check_dim(x.size(), prior.dim(), "gaussian_mmse_denoise");
  const double r2 = prior.std * prior.std;
  const double s2 = sigma * sigma;
  return (r2 * x + s2 * prior.mean) / (r2 + s2);
}

double gaussian_log_density(const GaussianPrior& prior, const Vec& x, double sigma) {
  check_sigma(sigma);
  check_dim(x.size(), prior.dim(), "gaussian_log_density");
  const double v = prior.std * prior.std + sigma * sigma;
  const double d = prior.dim();
  return -0.5 * ((x - prior.mean).squaredNorm() / v + d * std::log(2.0 * std::numbers::pi * v));
}

GmmPrior::GmmPrior(std::vector<Component> components) : comps_(std::move(components)) {
  if (comps_.empty()) throw ParameterError("GMM needs at least one component");
  dim_ = static_cast<int>(comps_.front().mean.size());
  if (dim_ < 1) throw ParameterError("GMM dimension must be >= 1");
  double wsum = 0.0;
  factors_.reserve(comps_.size());
  for (std::size_t k = 0; k < comps_.size(); ++k) {
    auto& c = comps_[k];
    if (!(c.weight > 0.0) || !std::isfinite(c.weight)) {
      throw ParameterError(fmt::format("GMM component {}: weight must be positive", k));
    }
    wsum += c.weight;
    if (c.mean.size() != dim_ || c.cov.rows() != dim_ || c.cov.cols() != dim_) {
      throw DimensionError(fmt::format("GMM component {}: inconsistent dimensions", k));
    }
    if (!c.mean.allFinite() || !c.cov.allFinite()) {
      throw ParameterError(fmt::format("GMM component {}: non-finite parameters", k));
    }
    const double asym = (c.cov - c.cov.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * std::max(1.0, c.cov.cwiseAbs().maxCoeff())) {
      throw ParameterError(fmt::format("GMM component {}: covariance is not symmetric", k));
    }
    c.cov = 0.5 * (c.cov + c.cov.transpose()).eval();
    Eigen::LLT<Mat> llt(c.cov);
    if (llt.info() != Eigen::Success) {
      throw ParameterError(fmt::format("GMM component {}: covariance is not positive definite", k));
    }
    Eigen::SelfAdjointEigenSolver<Mat> eig(c.cov);
    if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() <= 0.0) {
      throw ParameterError(fmt::format("GMM component {}: covariance eigendecomposition failed", k));
    }
    factors_.push_back(Factor{eig.eigenvectors(), eig.eigenvalues(), llt.matrixL()});
  }
  if (std::abs(wsum - 1.0) > 1e-12) {
    throw ParameterError(fmt::format("GMM weights sum to {:.17g}, expected 1", wsum));
  }
}

GmmPrior GmmPrior::isotropic(const std::vector<double>& weights, const std::vector<Vec>& means,
                             const std::vector<double>& stds) {
  if (weights.size() != means.size() || weights.size() != stds.size()) {
    throw DimensionError("isotropic GMM: weights, means and stds differ in length");
  }
  std::vector<Component> comps;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (!(stds[k] > 0.0)) throw ParameterError("isotropic GMM: std must be positive");
    const auto d = means[k].size();
    comps.push_back(Component{weights[k], means[k], stds[k] * stds[k] * Mat::Identity(d, d)});
  }
  return GmmPrior(std::move(comps));
}

GmmPrior GmmPrior::from_gaussian(const GaussianPrior& g) {
  return isotropic({1.0}, {g.mean}, {g.std});
}

void GmmPrior::evaluate(const Mat& X, double sigma, Mat* score, Mat* mmse, Mat* resp, Eigen::VectorXd* log_density) const {
  check_sigma(sigma);
  check_dim(X.rows(), dim_, "GMM evaluation");
  const Eigen::Index N = X.cols();
  const auto K = static_cast<Eigen::Index>(comps_.size());
  const double s2 = sigma * sigma;
  const double log2pi = std::log(2.0 * std::numbers::pi);

  Mat logp(K, N);
  std::vector<Mat> Y(comps_.size());  // (Sigma_k + s2 I)^-1 (x - mu_k)
  std::vector<Mat> SY;                // Sigma_k Y_k
  if (mmse) SY.resize(comps_.size());
  for (Eigen::Index k = 0; k < K; ++k) {
    const auto& c = comps_[k];
    const auto& f = factors_[k];
    const Vec inv = (f.lambda.array() + s2).inverse().matrix();
    const Mat D = X.colwise() - c.mean;
    const Mat UtD = f.U.transpose() * D;
    Y[k] = f.U * (inv.asDiagonal() * UtD);
    if (mmse) SY[k] = f.U * ((f.lambda.array() * inv.array()).matrix().asDiagonal() * UtD);
    const double logdet = (f.lambda.array() + s2).log().sum();
    const Eigen::RowVectorXd q = (D.array() * Y[k].array()).colwise().sum();
    logp.row(k) = (std::log(c.weight) - 0.5 * (dim_ * log2pi + logdet)) - 0.5 * q.array();
  }

  // log-sum-exp over components
  const Eigen::RowVectorXd m = logp.colwise().maxCoeff();
  Mat r = (logp.rowwise() - m).array().exp().matrix();
  const Eigen::RowVectorXd z = r.colwise().sum();
  r.array().rowwise() /= z.array();
  if (log_density) *log_density = (m.array() + z.array().log()).transpose();

  if (score) {
    score->setZero(dim_, N);
    for (Eigen::Index k = 0; k < K; ++k) score->noalias() -= Y[k] * r.row(k).asDiagonal();
  }
  if (mmse) {
    mmse->setZero(dim_, N);
    for (Eigen::Index k = 0; k < K; ++k) {
      Mat term = SY[k].colwise() + comps_[k].mean;
      mmse->noalias() += term * r.row(k).asDiagonal();
    }
  }
  if (resp) *resp = std::move(r);
}

Vec GmmPrior::score(const Vec& x, double sigma) const {
  Mat s;
  evaluate(x, sigma, &s, nullptr);
  return s.col(0);
}

Vec GmmPrior::mmse(const Vec& x, double sigma) const {
  Mat m;
  evaluate(x, sigma, nullptr, &m);
  return m.col(0);
}

Vec GmmPrior::responsibilities(const Vec& x, double sigma) const {
  Mat r;
  evaluate(x, sigma, nullptr, nullptr, &r);
  return r.col(0);
}

double GmmPrior::log_density(const Vec& x, double sigma) const {
  Eigen::VectorXd ld;
  evaluate(x, sigma, nullptr, nullptr, nullptr, &ld);
  return ld[0];
}

Vec GmmPrior::sample(GaussianRng& rng) const {
  // component by inverse CDF on the weights
  const double u = rng.uniform();
  std::size_t k = 0;
  double acc = 0.0;
  for (; k + 1 < comps_.size(); ++k) {
    acc += comps_[k].weight;
    if (u < acc) break;
  }
  return comps_[k].mean + factors_[k].chol * rng.normal_vector(dim_);
}

nlohmann::json GmmPrior::to_json() const {
  nlohmann::json j;
  j["dim"] = dim_;
  auto& arr = j["components"] = nlohmann::json::array();
  for (const auto& c : comps_) {
    nlohmann::json cj;
    cj["weight"] = c.weight;
    cj["mean"] = std::vector<double>(c.mean.data(), c.mean.data() + c.mean.size());
    auto rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < c.cov.rows(); ++i) {
      std::vector<double> row(static_cast<std::size_t>(c.cov.cols()));
      for (Eigen::Index jj = 0; jj < c.cov.cols(); ++jj) row[jj] = c.cov(i, jj);
      rows.push_back(row);
    }
    cj["cov"] = rows;
    arr.push_back(cj);
  }
  return j;
}

GmmPrior GmmPrior::from_json(const nlohmann::json& j) {
  try {
    std::vector<Component> comps;
    for (const auto& cj : j.at("components")) {
      const auto mean = cj.at("mean").get<std::vector<double>>();
      const auto d = static_cast<Eigen::Index>(mean.size());
      Component c;
      c.weight = cj.at("weight").get<double>();
      c.mean = Eigen::Map<const Vec>(mean.data(), d);
      if (cj.contains("cov")) {
        const auto rows = cj.at("cov").get<std::vector<std::vector<double>>>();
        if (static_cast<Eigen::Index>(rows.size()) != d) throw DimensionError("GMM file: covariance row count != dim");
        c.cov.resize(d, d);
        for (Eigen::Index i = 0; i < d; ++i) {
          if (static_cast<Eigen::Index>(rows[i].size()) != d) throw DimensionError("GMM file: ragged covariance");
          for (Eigen::Index k = 0; k < d; ++k) c.cov(i, k) = rows[i][k];
        }
      } else if (cj.contains("std")) {
        const double s = cj.at("std").get<double>();
        c.cov = s * s * Mat::Identity(d, d);
      } else {
        throw ConfigError("GMM file: component needs 'cov' or 'std'");
      }
      comps.push_back(std::move(c));
    }
    return GmmPrior(std::move(comps));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed GMM description: ") + e.what());
  }
}

Vec gmm_score(const GmmPrior& prior, const Vec& x, double sigma) { return prior.score(x, sigma); }

Vec gmm_mmse_denoise(const GmmPrior& prior, const Vec& x, double sigma) {
  if (!(sigma > 0.0)) throw ParameterError("gmm_mmse_denoise needs sigma > 0");
  return prior.mmse(x, sigma);
}

GmmPrior load_gmm(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open GMM file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("GMM file " + path.string() + ": " + e.what());
  }
  return GmmPrior::from_json(j);
}

void save_gmm(const GmmPrior& prior, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << prior.to_json().dump() << '\n';
}

ImageTensor GaussianImagePrior::score(const ImageTensor& x, double sigma) const {
  return x.with_data(gaussian_score(prior_, x.data(), sigma));
}

ImageTensor GaussianImagePrior::mmse(const ImageTensor& x, double sigma) const {
  return x.with_data(gaussian_mmse_denoise(prior_, x.data(), sigma));
}

std::string GaussianImagePrior::describe() const {
  return fmt::format("gaussian(d={}, std={})", prior_.dim(), prior_.std);
}

ImageTensor GmmImagePrior::score(const ImageTensor& x, double sigma) const {
  return x.with_data(prior_.score(x.data(), sigma));
}

ImageTensor GmmImagePrior::mmse(const ImageTensor& x, double sigma) const {
  return x.with_data(prior_.mmse(x.data(), sigma));
}

std::string GmmImagePrior::describe() const {
  return fmt::format("gmm(d={}, K={})", prior_.dim(), prior_.size());
}

PatchGmmPrior::PatchGmmPrior(GmmPrior prior, int patch_h, int patch_w, int channels)
    : prior_(std::move(prior)), ph_(patch_h), pw_(patch_w), channels_(channels) {
  if (ph_ < 1 || pw_ < 1 || channels_ < 1) throw ParameterError("patch extents must be positive");
  if (prior_.dim() != ph_ * pw_ * channels_) {
    throw DimensionError(fmt::format("patch prior dimension {} != {}x{}x{}", prior_.dim(), ph_, pw_, channels_));
  }
}

void PatchGmmPrior::check(const ImageTensor& x) const {
  if (x.channels() != channels_) {
    throw DimensionError(fmt::format("patch prior expects {} channels, got {}", channels_, x.channels()));
  }
  if (x.height() < ph_ || x.width() < pw_) {
    throw DimensionError(fmt::format("image {} smaller than {}x{} patch", x.shape().str(), ph_, pw_));
  }
}

Mat PatchGmmPrior::gather(const ImageTensor& x) const {
  const int H = x.height();
  const int W = x.width();
  Mat P(prior_.dim(), static_cast<Eigen::Index>(H) * W);
  for (int i = 0; i < H; ++i) {
    for (int j = 0; j < W; ++j) {
      const Eigen::Index col = static_cast<Eigen::Index>(i) * W + j;
      Eigen::Index r = 0;
      for (int c = 0; c < channels_; ++c) {
        for (int a = 0; a < ph_; ++a) {
          const int ii = (i + a) % H;
          for (int b = 0; b < pw_; ++b) P(r++, col) = x(c, ii, (j + b) % W);
        }
      }
    }
  }
  return P;
}

ImageTensor PatchGmmPrior::scatter_mean(const Mat& P, const Shape& shape) const {
  ImageTensor out(shape, 0.0);
  const int H = shape.height;
  const int W = shape.width;
  for (int i = 0; i < H; ++i) {
    for (int j = 0; j < W; ++j) {
      const Eigen::Index col = static_cast<Eigen::Index>(i) * W + j;
      Eigen::Index r = 0;
      for (int c = 0; c < channels_; ++c) {
        for (int a = 0; a < ph_; ++a) {
          const int ii = (i + a) % H;
          for (int b = 0; b < pw_; ++b) out(c, ii, (j + b) % W) += P(r++, col);
        }
      }
    }
  }
  out *= 1.0 / (ph_ * pw_);
  return out;
}

ImageTensor PatchGmmPrior::score(const ImageTensor& x, double sigma) const {
  check(x);
  Mat s;
  prior_.evaluate(gather(x), sigma, &s, nullptr);
  return scatter_mean(s, x.shape());
}

ImageTensor PatchGmmPrior::mmse(const ImageTensor& x, double sigma) const {
  check(x);
  Mat m;
  prior_.evaluate(gather(x), sigma, nullptr, &m);
  return scatter_mean(m, x.shape());
}

std::string PatchGmmPrior::describe() const {
  return fmt::format("patch-gmm({}x{}x{}, K={}, unit stride, averaged overlaps)", ph_, pw_, channels_, prior_.size());
}

ImageTensor PatchGmmPrior::sample_image(const Shape& shape, GaussianRng& rng) const {
  if (shape.channels != channels_) throw DimensionError("sample_image: channel count differs from the patch prior");
  if (shape.height % ph_ != 0 || shape.width % pw_ != 0) {
    throw DimensionError(fmt::format("sample_image: {} is not tiled by {}x{} patches", shape.str(), ph_, pw_));
  }
  ImageTensor img(shape);
  for (int i0 = 0; i0 < shape.height; i0 += ph_) {
    for (int j0 = 0; j0 < shape.width; j0 += pw_) {
      const Vec p = prior_.sample(rng);
      Eigen::Index r = 0;
      for (int c = 0; c < channels_; ++c) {
        for (int a = 0; a < ph_; ++a) {
          for (int b = 0; b < pw_; ++b) img(c, i0 + a, j0 + b) = p[r++];
        }
      }
    }
  }
  return img;
}

GmmPrior make_smooth_patch_gmm(int patch_h, int patch_w, int channels, int components, double amplitude,
                               double length_scale, double floor_std, double mean_lo, double mean_hi,
                               std::uint64_t seed) {
  if (components < 1) throw ParameterError("need at least one component");
  if (!(length_scale > 0.0) || !(floor_std > 0.0) || amplitude < 0.0) {
    throw ParameterError("smooth patch prior: length scale and floor must be positive");
  }
  const int d = patch_h * patch_w * channels;
  Mat cov = Mat::Zero(d, d);
  for (int c = 0; c < channels; ++c) {
    for (int p = 0; p < patch_h * patch_w; ++p) {
      for (int q = 0; q < patch_h * patch_w; ++q) {
        const double di = p / patch_w - q / patch_w;
        const double dj = p % patch_w - q % patch_w;
        const double k = amplitude * amplitude * std::exp(-(di * di + dj * dj) / (2.0 * length_scale * length_scale));
        cov(c * patch_h * patch_w + p, c * patch_h * patch_w + q) = k;
      }
    }
  }
  cov.diagonal().array() += floor_std * floor_std;
  GaussianRng rng(seed);
  std::vector<GmmPrior::Component> comps;
  for (int k = 0; k < components; ++k) {
    const double level = mean_lo + (mean_hi - mean_lo) * rng.uniform();
    comps.push_back(GmmPrior::Component{1.0 / components, Vec::Constant(d, level), cov});
  }
  // exact unit sum regardless of rounding in 1/K
  double rest = 1.0;
  for (int k = 0; k + 1 < components; ++k) rest -= comps[k].weight;
  comps.back().weight = rest;
  return GmmPrior(std::move(comps));
}

}  // namespace spnp
