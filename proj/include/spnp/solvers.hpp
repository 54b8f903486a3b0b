#pragma once

#include "spnp/adaptation.hpp"
#include "spnp/data_term.hpp"
#include "spnp/image.hpp"
#include "spnp/score_function.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace spnp {

enum class Method { PnpAdmm, Red, Dpir, DiffPir };

std::string_view to_string(Method m);
Method method_from_string(std::string_view s);

/// How gamma_k is obtained from the configured gamma / lambda and sigma_k.
enum class GammaRule {
  Constant,      ///< gamma_k = gamma
  OverSigma2,    ///< gamma_k = gamma / sigma_k^2
  Sigma2OverLambda,  ///< gamma_k = sigma_k^2 / lambda
};

std::string_view to_string(GammaRule r);
GammaRule gamma_rule_from_string(std::string_view s);

enum class InitRule { AdjointY, Zero };

struct SolverConfig {
  Method method = Method::PnpAdmm;
  int K = 100;
  double gamma = 1.0;
  GammaRule gamma_rule = GammaRule::Constant;
  double tau = 1.0;
  double lambda = 1.0;
  /// Noise levels: log-spaced from sigma1 to sigmaK, or fixed when equal.
  double sigma1 = 0.0;
  double sigmaK = 0.0;
  double zeta = 0.0;
  std::uint64_t seed = 0;
  bool strict_range = true;
  InitRule init = InitRule::AdjointY;
  /// Measurement noise level, used by the DiffPIR data weight.
  double noise_sigma = 0.0;

  /// ParameterError on inconsistent values.
  void validate() const;
  [[nodiscard]] nlohmann::json to_json() const;
  /// Fields absent from j keep their current values.
  void update_from_json(const nlohmann::json& j);
  static SolverConfig from_json(const nlohmann::json& j);
};

/// Defaults mirroring the published settings (values in [0,1] units).
SolverConfig default_config(Method m);

struct TraceRow {
  int k = 0;
  double sigma = 0.0;
  double gamma = 0.0;
  double residual = 0.0;
  double psnr = 0.0;  ///< NaN when no ground truth was given
  double wall_ms = 0.0;
};

struct SolverState {
  Method method = Method::PnpAdmm;
  ImageTensor x;
  ImageTensor z;
  ImageTensor s;
  int k = 0;
  std::vector<TraceRow> trace;

  /// z_K for ADMM/HQS, x_K for RED, the final clean estimate for DiffPIR.
  [[nodiscard]] const ImageTensor& reconstruction() const;
};

/// Geometric sequence from sigma1 down to sigmaK with exact endpoints.
std::vector<double> make_log_sigma_schedule(double sigma1, double sigmaK, int K);

/// sigma_k for k = 1..K of a config (constant when sigma1 == sigmaK).
std::vector<double> config_sigmas(const SolverConfig& config);

SolverState pnp_admm(const QuadraticDataTerm& dt, const Denoiser& denoiser, const SolverConfig& config,
                     const ImageTensor* truth = nullptr);
SolverState red(const QuadraticDataTerm& dt, const Denoiser& denoiser, const SolverConfig& config,
                const ImageTensor* truth = nullptr);
SolverState dpir_hqs(const QuadraticDataTerm& dt, const Denoiser& denoiser, const SolverConfig& config,
                     const ImageTensor* truth = nullptr);

/// DiffPIR-style sampler in the unscaled domain, levels sigma_1 > ... > sigma_K:
///   x0 <- D_{sigma_k}(x)
///   x0 <- prox_{gamma_k g}(x0),  gamma_k = sigma_k^2 / (lambda noise_sigma^2)
///   eps_hat <- (x - x0) / sigma_k
///   x <- x0 + sigma_{k+1} (sqrt(1 - zeta^2) eps_hat + zeta eps),  sigma_{K+1} = 0
/// starting from x = zeta sqrt(1 + sigma_1^2) eps.
SolverState diffpir_sample(const QuadraticDataTerm& dt, const Denoiser& denoiser, const SolverConfig& config,
                           const ImageTensor* truth = nullptr);
/// Same, driven by a VP score through the adapted denoiser.
SolverState diffpir_sample(const QuadraticDataTerm& dt, const ScorePtr& score, const SolverConfig& config,
                           const ImageTensor* truth = nullptr);

/// Dispatch on config.method.
SolverState solve(const QuadraticDataTerm& dt, const Denoiser& denoiser, const SolverConfig& config,
                  const ImageTensor* truth = nullptr);

/// CSV with a leading "# config: {...}" line, then k,sigma_k,gamma_k,residual,psnr[,wall_ms].
void write_trace_csv(const SolverState& state, const SolverConfig& config, const std::filesystem::path& path,
                     bool include_wall_time = true);

}  // namespace spnp
