#include "spnp/solvers.hpp"

#include "spnp/errors.hpp"
#include "spnp/metrics.hpp"
#include "spnp/rng.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

namespace spnp {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::PnpAdmm:
      return "pnp-admm";
    case Method::Red:
      return "red";
    case Method::Dpir:
      return "dpir";
    case Method::DiffPir:
      return "diffpir";
  }
  return "?";
}

Method method_from_string(std::string_view s) {
  if (s == "pnp-admm" || s == "admm") return Method::PnpAdmm;
  if (s == "red") return Method::Red;
  if (s == "dpir" || s == "hqs") return Method::Dpir;
  if (s == "diffpir") return Method::DiffPir;
  throw ConfigError(fmt::format("unknown method '{}'", s));
}

std::string_view to_string(GammaRule r) {
  switch (r) {
    case GammaRule::Constant:
      return "constant";
    case GammaRule::OverSigma2:
      return "over-sigma2";
    case GammaRule::Sigma2OverLambda:
      return "sigma2-over-lambda";
  }
  return "?";
}

GammaRule gamma_rule_from_string(std::string_view s) {
  if (s == "constant") return GammaRule::Constant;
  if (s == "over-sigma2") return GammaRule::OverSigma2;
  if (s == "sigma2-over-lambda") return GammaRule::Sigma2OverLambda;
  throw ConfigError(fmt::format("unknown gamma rule '{}'", s));
}

void SolverConfig::validate() const {
  auto fail = [](const std::string& m) { throw ParameterError("solver config: " + m); };
  if (K < 1) fail("K must be >= 1");
  if (!std::isfinite(sigma1) || !std::isfinite(sigmaK) || sigmaK < 0.0 || sigma1 < sigmaK) {
    fail("need sigma1 >= sigmaK >= 0");
  }
  if (sigma1 != sigmaK && (K < 2 || !(sigmaK > 0.0))) fail("a decreasing sigma schedule needs K >= 2 and sigmaK > 0");
  const bool uses_lambda = gamma_rule == GammaRule::Sigma2OverLambda || method == Method::DiffPir;
  if (uses_lambda && !(lambda > 0.0)) fail("lambda must be positive");
  if (gamma_rule != GammaRule::Sigma2OverLambda && method != Method::DiffPir && !(gamma > 0.0)) {
    fail("gamma must be positive");
  }
  if (gamma_rule == GammaRule::OverSigma2 && !(sigmaK > 0.0)) fail("gamma / sigma^2 needs sigma > 0");
  if (method == Method::Red && !(tau >= 0.0)) fail("tau must be nonnegative");
  if (!(zeta >= 0.0 && zeta <= 1.0)) fail("zeta must lie in [0, 1]");
  if (method == Method::DiffPir) {
    if (!(noise_sigma > 0.0)) throw ConfigError("diffpir needs a positive measurement noise level");
    if (!(sigmaK > 0.0)) fail("diffpir needs positive noise levels");
  }
}

nlohmann::json SolverConfig::to_json() const {
  return nlohmann::json{{"method", std::string(to_string(method))},
                        {"K", K},
                        {"gamma", gamma},
                        {"gamma_rule", std::string(to_string(gamma_rule))},
                        {"tau", tau},
                        {"lambda", lambda},
                        {"sigma1", sigma1},
                        {"sigmaK", sigmaK},
                        {"zeta", zeta},
                        {"seed", seed},
                        {"strict_range", strict_range},
                        {"init", init == InitRule::AdjointY ? "adjoint-y" : "zero"},
                        {"noise_sigma", noise_sigma}};
}

void SolverConfig::update_from_json(const nlohmann::json& j) {
  try {
    if (j.contains("method")) method = method_from_string(j.at("method").get<std::string>());
    if (j.contains("K")) K = j.at("K").get<int>();
    if (j.contains("gamma")) gamma = j.at("gamma").get<double>();
    if (j.contains("gamma_rule")) gamma_rule = gamma_rule_from_string(j.at("gamma_rule").get<std::string>());
    if (j.contains("tau")) tau = j.at("tau").get<double>();
    if (j.contains("lambda")) lambda = j.at("lambda").get<double>();
    if (j.contains("sigma")) sigma1 = sigmaK = j.at("sigma").get<double>();
    if (j.contains("sigma1")) sigma1 = j.at("sigma1").get<double>();
    if (j.contains("sigmaK")) sigmaK = j.at("sigmaK").get<double>();
    if (j.contains("zeta")) zeta = j.at("zeta").get<double>();
    if (j.contains("seed")) seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("strict_range")) strict_range = j.at("strict_range").get<bool>();
    if (j.contains("init")) {
      const auto s = j.at("init").get<std::string>();
      if (s == "adjoint-y") {
        init = InitRule::AdjointY;
      } else if (s == "zero") {
        init = InitRule::Zero;
      } else {
        throw ConfigError("unknown init rule '" + s + "'");
      }
    }
    if (j.contains("noise_sigma")) noise_sigma = j.at("noise_sigma").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed solver config: ") + e.what());
  }
}

SolverConfig SolverConfig::from_json(const nlohmann::json& j) {
  SolverConfig c;
  if (j.contains("method")) c = default_config(method_from_string(j.at("method").get<std::string>()));
  c.update_from_json(j);
  return c;
}

SolverConfig default_config(Method m) {
  SolverConfig c;
  c.method = m;
  c.K = 100;
  switch (m) {
    case Method::PnpAdmm:
      c.gamma = 0.43;
      c.gamma_rule = GammaRule::OverSigma2;
      c.sigma1 = 120.0 / 255.0;
      c.sigmaK = 10.0 / 255.0;
      break;
    case Method::Red:
      c.gamma = 0.28;
      c.tau = 3.57;
      c.sigma1 = c.sigmaK = 5.0 / 255.0;
      break;
    case Method::Dpir:
      c.lambda = 0.27;
      c.gamma_rule = GammaRule::Sigma2OverLambda;
      c.sigma1 = 130.0 / 255.0;
      c.sigmaK = 3.0 / 255.0;
      break;
    case Method::DiffPir:
      c.lambda = 3.0;
      c.zeta = 0.9;
      c.gamma_rule = GammaRule::Sigma2OverLambda;
      c.sigma1 = 50.0;
      c.sigmaK = 3.0 / 255.0;
      break;
  }
  return c;
}

const ImageTensor& SolverState::reconstruction() const {
  switch (method) {
    case Method::Red:
      return x;
    case Method::DiffPir:
      return x;
    case Method::PnpAdmm:
    case Method::Dpir:
      return z;
  }
  return z;
}

std::vector<double> make_log_sigma_schedule(double sigma1, double sigmaK, int K) {
  if (K < 2) throw ParameterError("log sigma schedule needs K >= 2");
  if (!(sigmaK > 0.0) || !(sigma1 >= sigmaK) || !std::isfinite(sigma1)) {
    throw ParameterError("log sigma schedule needs sigma1 >= sigmaK > 0");
  }
  std::vector<double> s(static_cast<std::size_t>(K));
  const double ratio = sigmaK / sigma1;
  for (int k = 0; k < K; ++k) s[k] = sigma1 * std::pow(ratio, static_cast<double>(k) / (K - 1));
  s.front() = sigma1;
  s.back() = sigmaK;
  return s;
}

std::vector<double> config_sigmas(const SolverConfig& config) {
  if (config.sigma1 == config.sigmaK) return std::vector<double>(static_cast<std::size_t>(config.K), config.sigma1);
  return make_log_sigma_schedule(config.sigma1, config.sigmaK, config.K);
}

namespace {

using Clock = std::chrono::steady_clock;

double gamma_at(const SolverConfig& c, double sigma) {
  switch (c.gamma_rule) {
    case GammaRule::Constant:
      return c.gamma;
    case GammaRule::OverSigma2:
      return c.gamma / (sigma * sigma);
    case GammaRule::Sigma2OverLambda:
      return sigma * sigma / c.lambda;
  }
  return c.gamma;
}

void require_method(const SolverConfig& c, Method m) {
  if (c.method != m) {
    throw ConfigError(fmt::format("config method is {}, expected {}", to_string(c.method), to_string(m)));
  }
  c.validate();
}

ImageTensor initial_point(const QuadraticDataTerm& dt, const SolverConfig& c) {
  if (c.init == InitRule::Zero) return ImageTensor(dt.y().shape(), 0.0);
  return dt.adjoint_y();
}

// Denoiser call with the iteration index attached to range/condition errors.
ImageTensor denoise_at(const Denoiser& d, const ImageTensor& v, double sigma, int k) {
  try {
    return d.denoise(v, sigma);
  } catch (const RangeError& e) {
    throw RangeError(fmt::format("iteration {}: {}", k, e.what()));
  } catch (const ConditionError& e) {
    throw ConditionError(fmt::format("iteration {}: {}", k, e.what()));
  } catch (const NumericError& e) {
    throw NumericError(fmt::format("iteration {}: {}", k, e.what()));
  }
}

void require_finite(const ImageTensor& v, const char* name, int k) {
  if (!v.all_finite()) throw NumericError(fmt::format("iteration {}: non-finite values in {}", k, name));
}

void record(SolverState& st, int k, double sigma, double gamma, double residual, const ImageTensor& estimate,
            const ImageTensor* truth, Clock::time_point t0) {
  TraceRow row;
  row.k = k;
  row.sigma = sigma;
  row.gamma = gamma;
  row.residual = residual;
  row.psnr = truth ? psnr(estimate, *truth) : std::numeric_limits<double>::quiet_NaN();
  row.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  st.trace.push_back(row);
  st.k = k;
}

}  // namespace

SolverState pnp_admm(const QuadraticDataTerm& dt, const Denoiser& denoiser, const SolverConfig& config,
                     const ImageTensor* truth) {
  require_method(config, Method::PnpAdmm);
  const auto sigmas = config_sigmas(config);
  SolverState st;
  st.method = Method::PnpAdmm;
  st.z = initial_point(dt, config);
  st.s = ImageTensor(st.z.shape(), 0.0);
  st.x = st.z;
  st.trace.reserve(sigmas.size());
  const auto t0 = Clock::now();
  for (int k = 1; k <= config.K; ++k) {
    const double sigma = sigmas[k - 1];
    const double gamma = gamma_at(config, sigma);
    st.x = prox_quadratic(dt, st.z - st.s, gamma);
    st.z = denoise_at(denoiser, st.x + st.s, sigma, k);
    st.s += st.x - st.z;
    require_finite(st.x, "x", k);
    require_finite(st.z, "z", k);
    require_finite(st.s, "s", k);
    record(st, k, sigma, gamma, norm(st.x - st.z), st.z, truth, t0);
  }
  return st;
}

SolverState red(const QuadraticDataTerm& dt, const Denoiser& denoiser, const SolverConfig& config,
                const ImageTensor* truth) {
  require_method(config, Method::Red);
  const auto sigmas = config_sigmas(config);
  SolverState st;
  st.method = Method::Red;
  st.s = initial_point(dt, config);
  st.x = st.s;
  st.z = st.s;
  st.trace.reserve(sigmas.size());
  const auto t0 = Clock::now();
  for (int k = 1; k <= config.K; ++k) {
    const double sigma = sigmas[k - 1];
    const double gamma = gamma_at(config, sigma);
    st.x = st.s - gamma * grad_quadratic(dt, st.s);
    st.z = denoise_at(denoiser, st.x, sigma, k);
    st.s = st.x - (gamma * config.tau) * (st.s - st.z);
    require_finite(st.x, "x", k);
    require_finite(st.z, "z", k);
    require_finite(st.s, "s", k);
    record(st, k, sigma, gamma, norm(st.x - st.z), st.x, truth, t0);
  }
  return st;
}

SolverState dpir_hqs(const QuadraticDataTerm& dt, const Denoiser& denoiser, const SolverConfig& config,
                     const ImageTensor* truth) {
  require_method(config, Method::Dpir);
  const auto sigmas = config_sigmas(config);
  SolverState st;
  st.method = Method::Dpir;
  st.z = initial_point(dt, config);
  st.x = st.z;
  st.s = ImageTensor(st.z.shape(), 0.0);
  st.trace.reserve(sigmas.size());
  const auto t0 = Clock::now();
  for (int k = 1; k <= config.K; ++k) {
    const double sigma = sigmas[k - 1];
    const double gamma = gamma_at(config, sigma);
    st.x = prox_quadratic(dt, st.z, gamma);
    st.z = denoise_at(denoiser, st.x, sigma, k);
    require_finite(st.x, "x", k);
    require_finite(st.z, "z", k);
    record(st, k, sigma, gamma, norm(st.x - st.z), st.z, truth, t0);
  }
  return st;
}

SolverState diffpir_sample(const QuadraticDataTerm& dt, const Denoiser& denoiser, const SolverConfig& config,
                           const ImageTensor* truth) {
  require_method(config, Method::DiffPir);
  const auto sigmas = config_sigmas(config);
  const Shape shape = dt.y().shape();
  GaussianRng rng(config.seed);
  const double zeta = config.zeta;
  const double keep = std::sqrt(1.0 - zeta * zeta);
  auto noise = [&]() {
    ImageTensor e(shape);
    for (Eigen::Index i = 0; i < e.data().size(); ++i) e.data()[i] = rng.normal();
    return e;
  };

  SolverState st;
  st.method = Method::DiffPir;
  // with zeta = 0 no random numbers are drawn at all
  st.x = zeta > 0.0 ? (zeta * std::sqrt(1.0 + sigmas.front() * sigmas.front())) * noise() : ImageTensor(shape, 0.0);
  st.s = ImageTensor(shape, 0.0);
  st.trace.reserve(sigmas.size());
  const auto t0 = Clock::now();
  const double n2 = config.noise_sigma * config.noise_sigma;
  for (int k = 1; k <= config.K; ++k) {
    const double sigma = sigmas[k - 1];
    const double gamma = sigma * sigma / (config.lambda * n2);
    st.z = denoise_at(denoiser, st.x, sigma, k);
    const ImageTensor x0 = prox_quadratic(dt, st.z, gamma);
    require_finite(x0, "x0", k);
    const double residual = norm(x0 - st.z);
    const double next = k < config.K ? sigmas[k] : 0.0;
    if (next > 0.0) {
      const ImageTensor eps_hat = (1.0 / sigma) * (st.x - x0);
      ImageTensor mix = keep * eps_hat;
      if (zeta > 0.0) mix += zeta * noise();
      st.x = x0 + next * mix;
    } else {
      st.x = x0;
    }
    require_finite(st.x, "x", k);
    record(st, k, sigma, gamma, residual, x0, truth, t0);
  }
  return st;
}

SolverState diffpir_sample(const QuadraticDataTerm& dt, const ScorePtr& score, const SolverConfig& config,
                           const ImageTensor* truth) {
  if (!score || score->convention() != Convention::VP || !score->schedule() ||
      score->schedule()->kind() != ScheduleKind::VP) {
    throw ConfigError("diffpir needs a VP score with its schedule");
  }
  AdaptOptions opts;
  opts.range = config.strict_range ? RangePolicy::Strict : RangePolicy::Lenient;
  const AdaptedDenoiser d(score, opts);
  return diffpir_sample(dt, d, config, truth);
}

SolverState solve(const QuadraticDataTerm& dt, const Denoiser& denoiser, const SolverConfig& config,
                  const ImageTensor* truth) {
  switch (config.method) {
    case Method::PnpAdmm:
      return pnp_admm(dt, denoiser, config, truth);
    case Method::Red:
      return red(dt, denoiser, config, truth);
    case Method::Dpir:
      return dpir_hqs(dt, denoiser, config, truth);
    case Method::DiffPir:
      return diffpir_sample(dt, denoiser, config, truth);
  }
  throw ConfigError("unknown method");
}

void write_trace_csv(const SolverState& state, const SolverConfig& config, const std::filesystem::path& path,
                     bool include_wall_time) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "# config: " << config.to_json().dump() << '\n';
  out << "k,sigma_k,gamma_k,residual,psnr";
  if (include_wall_time) out << ",wall_ms";
  out << '\n';
  for (const auto& r : state.trace) {
    out << r.k << ',' << fmt::format("{:.17g},{:.17g},{:.17g},", r.sigma, r.gamma, r.residual);
    if (!std::isnan(r.psnr)) out << fmt::format("{:.6f}", r.psnr);
    if (include_wall_time) out << fmt::format(",{:.3f}", r.wall_ms);
    out << '\n';
  }
}

}  // namespace spnp
