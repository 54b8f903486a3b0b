#include "spnp/schedule.hpp"

#include "spnp/errors.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

namespace spnp {

std::string_view to_string(ScheduleKind k) { return k == ScheduleKind::VE ? "VE" : "VP"; }

namespace {

void require_increasing(const std::vector<double>& s, const char* what) {
  if (s.empty()) throw ParameterError(std::string(what) + ": schedule must have at least one level");
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!std::isfinite(s[i]) || s[i] <= 0.0) {
      throw ParameterError(std::string(what) + ": level " + std::to_string(i + 1) + " must be positive and finite");
    }
    if (i > 0 && !(s[i] > s[i - 1])) {
      throw ParameterError(std::string(what) + ": levels must be strictly increasing (t=" + std::to_string(i + 1) +
                           ")");
    }
  }
}

}  // namespace

NoiseSchedule NoiseSchedule::ve(std::vector<double> sigmas) {
  require_increasing(sigmas, "VE schedule");
  NoiseSchedule s;
  s.kind_ = ScheduleKind::VE;
  s.sigmas_ = std::move(sigmas);
  return s;
}

NoiseSchedule NoiseSchedule::vp(std::vector<double> betas) {
  if (betas.empty()) throw ParameterError("VP schedule: need at least one beta");
  NoiseSchedule s;
  s.kind_ = ScheduleKind::VP;
  s.alpha_bars_.reserve(betas.size());
  s.sigmas_.reserve(betas.size());
  // log abar accumulated with log1p so tiny betas keep full precision
  double log_abar = 0.0;
  for (std::size_t i = 0; i < betas.size(); ++i) {
    const double b = betas[i];
    if (!std::isfinite(b) || b <= 0.0 || b >= 1.0) {
      throw ParameterError("VP schedule: beta_" + std::to_string(i + 1) + " must lie in (0, 1)");
    }
    log_abar += std::log1p(-b);
    s.alpha_bars_.push_back(std::exp(log_abar));
    s.sigmas_.push_back(std::sqrt(std::expm1(-log_abar)));
  }
  require_increasing(s.sigmas_, "VP schedule");
  s.betas_ = std::move(betas);
  return s;
}

NoiseSchedule NoiseSchedule::vp_linear(double beta_start, double beta_end, int T) {
  if (T < 1) throw ParameterError("VP schedule: T must be >= 1");
  std::vector<double> b(static_cast<std::size_t>(T));
  for (int i = 0; i < T; ++i) {
    b[i] = T == 1 ? beta_start : beta_start + (beta_end - beta_start) * static_cast<double>(i) / (T - 1);
  }
  return vp(std::move(b));
}

NoiseSchedule NoiseSchedule::ve_geometric(double sigma_min, double sigma_max, int T) {
  if (T < 1) throw ParameterError("VE schedule: T must be >= 1");
  if (!(sigma_min > 0.0) || !(sigma_max > sigma_min || (T == 1 && sigma_max == sigma_min))) {
    throw ParameterError("VE schedule: need 0 < sigma_min < sigma_max");
  }
  std::vector<double> s(static_cast<std::size_t>(T));
  for (int i = 0; i < T; ++i) {
    s[i] = T == 1 ? sigma_min : sigma_min * std::pow(sigma_max / sigma_min, static_cast<double>(i) / (T - 1));
  }
  s.front() = sigma_min;
  s.back() = sigma_max;
  return ve(std::move(s));
}

NoiseSchedule NoiseSchedule::vp_from_sigmas(const std::vector<double>& sigmas) {
  require_increasing(sigmas, "VP schedule");
  // abar_t = 1 / (1 + sigma_t^2), beta_t = 1 - abar_t / abar_{t-1}
  std::vector<double> betas(sigmas.size());
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    const double s2 = sigmas[i] * sigmas[i];
    const double s2prev = i == 0 ? 0.0 : sigmas[i - 1] * sigmas[i - 1];
    betas[i] = (s2 - s2prev) / (1.0 + s2);
  }
  NoiseSchedule s = vp(std::move(betas));
  // keep the requested levels verbatim; the recursion above is exact up to rounding
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    s.sigmas_[i] = sigmas[i];
    s.alpha_bars_[i] = 1.0 / (1.0 + sigmas[i] * sigmas[i]);
  }
  return s;
}

const std::vector<double>& NoiseSchedule::betas() const {
  if (kind_ != ScheduleKind::VP) throw ConfigError("betas requested from a VE schedule");
  return betas_;
}

const std::vector<double>& NoiseSchedule::alpha_bars() const {
  if (kind_ != ScheduleKind::VP) throw ConfigError("alpha_bars requested from a VE schedule");
  return alpha_bars_;
}

double NoiseSchedule::sigma_at(int t) const {
  if (t < 1 || t > T()) throw ParameterError("schedule index " + std::to_string(t) + " outside [1, " + std::to_string(T()) + "]");
  return sigmas_[static_cast<std::size_t>(t - 1)];
}

double NoiseSchedule::alpha_bar_at(int t) const {
  const auto& ab = alpha_bars();
  if (t < 1 || t > T()) throw ParameterError("schedule index " + std::to_string(t) + " outside [1, " + std::to_string(T()) + "]");
  return ab[static_cast<std::size_t>(t - 1)];
}

double NoiseSchedule::sigma_continuous(double u, SigmaInterp interp) const {
  if (!(u >= 0.0) || u > static_cast<double>(T())) {
    throw ConditionError("time " + std::to_string(u) + " outside [0, " + std::to_string(T()) + "]");
  }
  if (u <= 1.0) return u * sigmas_[0];
  auto k = static_cast<std::size_t>(std::floor(u));
  if (k >= sigmas_.size()) return sigmas_.back();
  const double f = u - static_cast<double>(k);
  if (f == 0.0) return sigmas_[k - 1];
  const double lo = sigmas_[k - 1];
  const double hi = sigmas_[k];
  if (interp == SigmaInterp::Log) return lo * std::pow(hi / lo, f);
  return lo + f * (hi - lo);
}

nlohmann::json NoiseSchedule::to_json() const {
  nlohmann::json j;
  j["kind"] = std::string(to_string(kind_));
  if (kind_ == ScheduleKind::VE) {
    j["sigmas"] = sigmas_;
  } else {
    j["betas"] = betas_;
  }
  return j;
}

NoiseSchedule NoiseSchedule::from_json(const nlohmann::json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "VE" || kind == "ve") {
      if (j.contains("sigmas")) return ve(j.at("sigmas").get<std::vector<double>>());
      return ve_geometric(j.at("sigma_min").get<double>(), j.at("sigma_max").get<double>(), j.at("T").get<int>());
    }
    if (kind == "VP" || kind == "vp") {
      if (j.contains("betas")) return vp(j.at("betas").get<std::vector<double>>());
      if (j.contains("sigmas")) return vp_from_sigmas(j.at("sigmas").get<std::vector<double>>());
      return vp_linear(j.at("beta_start").get<double>(), j.at("beta_end").get<double>(), j.at("T").get<int>());
    }
    throw ConfigError("unknown schedule kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed schedule: ") + e.what());
  }
}

NoiseSchedule load_schedule(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open schedule file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("schedule file " + path.string() + ": " + e.what());
  }
  return NoiseSchedule::from_json(j);
}

void save_schedule(const NoiseSchedule& s, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << s.to_json().dump(2) << '\n';
}

double vp_sigma_of_t(const NoiseSchedule& schedule, int t) {
  if (schedule.kind() != ScheduleKind::VP) throw ConfigError("vp_sigma_of_t needs a VP schedule");
  return schedule.sigma_at(t);
}

namespace {

// Level k (1-based) of the extended sequence; exact native level whenever
// T k / T' is an integer.
double extended_level(const NoiseSchedule& schedule, int k, int t_prime, SigmaInterp interp) {
  const int T = schedule.T();
  const long long num = static_cast<long long>(T) * k;
  if (num % t_prime == 0) return schedule.sigma_at(static_cast<int>(num / t_prime));
  return schedule.sigma_continuous(static_cast<double>(num) / t_prime, interp);
}

}  // namespace

std::vector<double> interpolate_schedule(const NoiseSchedule& schedule, int t_prime, SigmaInterp interp) {
  const int T = schedule.T();
  if (t_prime < T) {
    throw ParameterError("extended length " + std::to_string(t_prime) + " shorter than native T=" + std::to_string(T));
  }
  if (t_prime == T) return schedule.sigmas();
  std::vector<double> out(static_cast<std::size_t>(t_prime));
  for (int k = 1; k <= t_prime; ++k) out[k - 1] = extended_level(schedule, k, t_prime, interp);
  return out;
}

namespace {

// Increasing sequences are read through at(i), i in [0, n), so the extended
// sequence never has to be materialized.
template <class At>
std::size_t first_not_below(std::size_t n, double v, const At& at) {
  std::size_t lo = 0;
  std::size_t len = n;
  while (len > 0) {
    const std::size_t half = len / 2;
    if (at(lo + half) < v) {
      lo += half + 1;
      len -= half + 1;
    } else {
      len = half;
    }
  }
  return lo;
}

// Nearest entry, ties to the lower index. Returns a 0-based index.
template <class At>
std::size_t nearest_index(std::size_t n, double v, const At& at) {
  const std::size_t hi = first_not_below(n, v, at);
  if (hi == 0) return 0;
  if (hi == n) return n - 1;
  const std::size_t lo = hi - 1;
  return (v - at(lo) <= at(hi) - v) ? lo : hi;
}

template <class At>
double bracket_gap(std::size_t n, double v, const At& at) {
  if (n == 1) return 0.0;
  // first entry strictly above v
  std::size_t lo = 0;
  std::size_t len = n;
  while (len > 0) {
    const std::size_t half = len / 2;
    if (!(v < at(lo + half))) {
      lo += half + 1;
      len -= half + 1;
    } else {
      len = half;
    }
  }
  std::size_t hi = lo == n ? n - 1 : lo;
  if (hi == 0) hi = 1;
  return at(hi) - at(hi - 1);
}

}  // namespace

ParamMatch param_matching(const NoiseSchedule& schedule, double sigma, const MatchOptions& options) {
  if (!std::isfinite(sigma) || !(sigma > 0.0)) throw ParameterError("requested sigma must be positive and finite");
  const int T = schedule.T();
  const int t_prime_total = options.t_prime == 0 ? 10 * T : options.t_prime;
  ParamMatch m;
  m.sigma_requested = sigma;
  m.t_prime_total = t_prime_total;

  double target = sigma;
  const double lo = schedule.sigma_min();
  const double hi = schedule.sigma_max();
  if (sigma < lo || sigma > hi) {
    if (options.range == RangePolicy::Strict) {
      throw RangeError(fmt::format("sigma {:g} outside the schedule range [{:g}, {:g}]", sigma, lo, hi));
    }
    target = std::clamp(sigma, lo, hi);
    m.clamped = true;
    spdlog::warn("sigma {} outside schedule range [{}, {}], clamped to {}", sigma, lo, hi, target);
  }

  if (schedule.kind() == ScheduleKind::VE) {
    const auto& native = schedule.sigmas();
    const auto at = [&native](std::size_t i) { return native[i]; };
    const std::size_t i = nearest_index(native.size(), target, at);
    m.c = 1.0;
    m.t_cond = static_cast<double>(i + 1);
    m.sigma_achieved = native[i];
    // report the extended index of the chosen grid level
    m.t_prime = static_cast<int>(((static_cast<long long>(i) + 1) * t_prime_total + T - 1) / T);
    m.bracket_gap = bracket_gap(native.size(), target, at);
    return m;
  }

  if (t_prime_total < T) {
    throw ParameterError(fmt::format("extended length {} shorter than native T={}", t_prime_total, T));
  }
  const auto at = [&](std::size_t i) {
    return extended_level(schedule, static_cast<int>(i) + 1, t_prime_total, options.interp);
  };
  const auto n = static_cast<std::size_t>(t_prime_total);
  const std::size_t k = nearest_index(n, target, at);
  m.t_prime = static_cast<int>(k + 1);
  m.sigma_achieved = at(k);
  m.c = 1.0 / std::sqrt(1.0 + m.sigma_achieved * m.sigma_achieved);
  m.t_cond = static_cast<double>(T) * static_cast<double>(m.t_prime) / static_cast<double>(t_prime_total);
  m.bracket_gap = bracket_gap(n, target, at);
  return m;
}

}  // namespace spnp
