#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string_view>
#include <vector>

namespace spnp {

enum class ScheduleKind { VE, VP };

std::string_view to_string(ScheduleKind k);

/// How noise levels between native grid points are filled in.
enum class SigmaInterp { Linear, Log };

/// Discrete training noise sequence of a diffusion model, indexed t = 1..T.
///
/// VE schedules store sigma_t directly. VP schedules store beta_t; alpha_t =
/// 1 - beta_t, abar_t = prod_{s<=t} alpha_s, and the equivalent unscaled noise
/// level is sigma_t = sqrt((1 - abar_t) / abar_t).
///
/// Between grid points the schedule is read as a continuous function of time
/// u in [0, T], piecewise linear in sigma through the knots (t, sigma_t) plus
/// the clean-data knot (0, 0). For VP the matching scale is
/// c(u) = 1 / sqrt(1 + sigma(u)^2), so c(t) = sqrt(abar_t) on the grid.
class NoiseSchedule {
 public:
  static NoiseSchedule ve(std::vector<double> sigmas);
  static NoiseSchedule vp(std::vector<double> betas);
  /// betas linearly spaced from beta_start to beta_end (DDPM convention).
  static NoiseSchedule vp_linear(double beta_start, double beta_end, int T);
  /// VE levels geometrically spaced from sigma_min to sigma_max.
  static NoiseSchedule ve_geometric(double sigma_min, double sigma_max, int T);
  /// VP schedule whose sigma_t equal the given increasing levels.
  static NoiseSchedule vp_from_sigmas(const std::vector<double>& sigmas);

  [[nodiscard]] ScheduleKind kind() const { return kind_; }
  [[nodiscard]] int T() const { return static_cast<int>(sigmas_.size()); }

  /// sigma_t for t = 1..T (index 0 holds t = 1).
  [[nodiscard]] const std::vector<double>& sigmas() const { return sigmas_; }
  [[nodiscard]] const std::vector<double>& betas() const;
  [[nodiscard]] const std::vector<double>& alpha_bars() const;

  /// 1-based grid accessors; ParameterError outside [1, T].
  [[nodiscard]] double sigma_at(int t) const;
  [[nodiscard]] double alpha_bar_at(int t) const;

  [[nodiscard]] double sigma_min() const { return sigmas_.front(); }
  [[nodiscard]] double sigma_max() const { return sigmas_.back(); }

  /// Continuous-time noise level, u in [0, T].
  [[nodiscard]] double sigma_continuous(double u, SigmaInterp interp = SigmaInterp::Linear) const;

  [[nodiscard]] nlohmann::json to_json() const;
  static NoiseSchedule from_json(const nlohmann::json& j);

 private:
  NoiseSchedule() = default;

  ScheduleKind kind_ = ScheduleKind::VE;
  std::vector<double> sigmas_;
  std::vector<double> betas_;
  std::vector<double> alpha_bars_;
};

NoiseSchedule load_schedule(const std::filesystem::path& path);
void save_schedule(const NoiseSchedule& s, const std::filesystem::path& path);

/// sqrt((1 - abar_t) / abar_t) for a VP schedule, 1 <= t <= T.
double vp_sigma_of_t(const NoiseSchedule& schedule, int t);

/// Extended sequence of length T', entry t' = 1..T' holding sigma(T t'/T')
/// read off the continuous schedule. T' == T returns the native sequence;
/// T' < T is a ParameterError. When T' is a multiple of T every native level
/// appears exactly, at t' = (T'/T) t.
std::vector<double> interpolate_schedule(const NoiseSchedule& schedule, int t_prime,
                                         SigmaInterp interp = SigmaInterp::Linear);

enum class RangePolicy { Strict, Lenient };

struct MatchOptions {
  int t_prime = 0;  ///< 0 selects 10 T.
  RangePolicy range = RangePolicy::Strict;
  SigmaInterp interp = SigmaInterp::Linear;
};

/// Output of param_matching: the scale c and conditioning time the score
/// network should be called with to act as a denoiser at sigma_requested.
struct ParamMatch {
  double c = 1.0;
  double t_cond = 0.0;
  double sigma_achieved = 0.0;
  double sigma_requested = 0.0;
  int t_prime = 0;        ///< Matched index in the searched sequence (1-based).
  int t_prime_total = 0;  ///< Length T' of the extended sequence.
  /// Gap between the two grid levels bracketing sigma_requested in the
  /// sequence the match was taken from (interpolated for VP, native for VE,
  /// whose networks only accept grid times).
  double bracket_gap = 0.0;
  bool clamped = false;
};

/// Finds the noise level nearest to `sigma` (ties toward the smaller index).
///
/// VP: c = sqrt(abar) at the matched interpolated index, t_cond = T t'/T'.
/// VE: c = 1, t_cond = the native grid index nearest to the matched level.
/// Out-of-range sigma throws RangeError (strict) or is clamped to the nearest
/// end of [sigma_1, sigma_T] with a logged warning (lenient).
ParamMatch param_matching(const NoiseSchedule& schedule, double sigma, const MatchOptions& options = {});

}  // namespace spnp
