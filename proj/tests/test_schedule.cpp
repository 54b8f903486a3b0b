#include "oracle_values.hpp"

#include "spnp/errors.hpp"
#include "spnp/schedule.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>

using namespace spnp;

TEST_CASE("linear VP schedule matches reference values") {
  const NoiseSchedule s = NoiseSchedule::vp_linear(1e-4, 0.02, 1000);
  CHECK(s.kind() == ScheduleKind::VP);
  CHECK(s.T() == 1000);
  const struct {
    int t;
    double abar, sigma;
  } cases[] = {{1, oracle::kVpAbar1, oracle::kVpSigma1},
               {10, oracle::kVpAbar10, oracle::kVpSigma10},
               {500, oracle::kVpAbar500, oracle::kVpSigma500},
               {1000, oracle::kVpAbar1000, oracle::kVpSigma1000}};
  for (const auto& c : cases) {
    CHECK(s.alpha_bar_at(c.t) == doctest::Approx(c.abar).epsilon(1e-12));
    CHECK(s.sigma_at(c.t) == doctest::Approx(c.sigma).epsilon(1e-11));
    CHECK(vp_sigma_of_t(s, c.t) == doctest::Approx(c.sigma).epsilon(1e-11));
  }
  CHECK_THROWS_AS(s.sigma_at(0), ParameterError);
  CHECK_THROWS_AS(s.sigma_at(1001), ParameterError);
}

TEST_CASE("schedule construction validation") {
  CHECK_THROWS_AS(NoiseSchedule::ve({}), ParameterError);
  CHECK_THROWS_AS(NoiseSchedule::ve({0.1, 0.1}), ParameterError);
  CHECK_THROWS_AS(NoiseSchedule::ve({-0.1, 0.2}), ParameterError);
  CHECK_THROWS_AS(NoiseSchedule::vp({0.1, 1.0}), ParameterError);
  CHECK_THROWS_AS(NoiseSchedule::vp({0.0, 0.1}), ParameterError);
  const NoiseSchedule g = NoiseSchedule::ve_geometric(0.01, 100.0, 9);
  CHECK(g.sigma_min() == doctest::Approx(0.01));
  CHECK(g.sigma_max() == doctest::Approx(100.0));
  CHECK(g.sigmas()[4] == doctest::Approx(1.0));
}

TEST_CASE("vp_from_sigmas reproduces the requested levels") {
  const std::vector<double> sig = {0.05, 0.2, 0.7, 1.9, 6.0};
  const NoiseSchedule s = NoiseSchedule::vp_from_sigmas(sig);
  for (int t = 1; t <= 5; ++t) {
    CHECK(vp_sigma_of_t(s, t) == doctest::Approx(sig[t - 1]).epsilon(1e-12));
    CHECK(s.alpha_bar_at(t) == doctest::Approx(1.0 / (1.0 + sig[t - 1] * sig[t - 1])).epsilon(1e-12));
  }
}

TEST_CASE("continuous sigma passes through the knots") {
  for (const NoiseSchedule& s : {NoiseSchedule::vp_linear(1e-4, 0.02, 50), NoiseSchedule::ve_geometric(0.01, 5.0, 30)}) {
    CHECK(s.sigma_continuous(0.0) == 0.0);
    for (int t = 1; t <= s.T(); ++t) {
      CHECK(s.sigma_continuous(t) == s.sigma_at(t));
      CHECK(s.sigma_continuous(t, SigmaInterp::Log) == doctest::Approx(s.sigma_at(t)).epsilon(1e-14));
    }
    const double mid = s.sigma_continuous(3.5);
    CHECK(mid == doctest::Approx(0.5 * (s.sigma_at(3) + s.sigma_at(4))));
    const double lmid = s.sigma_continuous(3.5, SigmaInterp::Log);
    CHECK(lmid == doctest::Approx(std::sqrt(s.sigma_at(3) * s.sigma_at(4))));
  }
}

TEST_CASE("interpolated sequence") {
  const NoiseSchedule s = NoiseSchedule::vp_linear(1e-4, 0.02, 100);
  const auto native = interpolate_schedule(s, 100);
  CHECK(native == s.sigmas());
  const auto ext = interpolate_schedule(s, 1000);
  REQUIRE(ext.size() == 1000);
  for (int t = 1; t <= 100; ++t) CHECK(ext[static_cast<std::size_t>(10 * t - 1)] == s.sigmas()[t - 1]);
  for (std::size_t i = 1; i < ext.size(); ++i) CHECK(ext[i] > ext[i - 1]);
  CHECK(ext.front() == doctest::Approx(0.1 * s.sigma_at(1)));
  CHECK_THROWS_AS(interpolate_schedule(s, 99), ParameterError);
}

TEST_CASE("VP matching at a native level is exact") {
  const NoiseSchedule s = NoiseSchedule::vp_linear(1e-4, 0.02, 1000);
  const ParamMatch m = param_matching(s, oracle::kVpSigma500);
  CHECK(m.t_prime_total == 10000);
  CHECK(m.t_prime == 5000);
  CHECK(m.t_cond == 500.0);
  CHECK(m.sigma_achieved == s.sigma_at(500));
  CHECK(m.c == doctest::Approx(std::sqrt(oracle::kVpAbar500)).epsilon(1e-12));
  CHECK_FALSE(m.clamped);
}

TEST_CASE("VP matching between levels") {
  const NoiseSchedule s = NoiseSchedule::vp_linear(1e-4, 0.02, 1000);
  for (double sigma : {0.0123, 0.25, 1.0, 7.7, 120.0}) {
    const ParamMatch m = param_matching(s, sigma);
    CHECK(std::abs(m.sigma_achieved - sigma) <= 0.5 * m.bracket_gap + 1e-15);
    CHECK(m.c == doctest::Approx(1.0 / std::sqrt(1.0 + m.sigma_achieved * m.sigma_achieved)).epsilon(1e-12));
    CHECK(m.t_cond == doctest::Approx(1000.0 * m.t_prime / 10000.0));
  }
  // a larger T' never matches worse
  MatchOptions fine;
  fine.t_prime = 100000;
  const double coarse_err = std::abs(param_matching(s, 0.25).sigma_achieved - 0.25);
  CHECK(std::abs(param_matching(s, 0.25, fine).sigma_achieved - 0.25) <= coarse_err);
  MatchOptions same;
  same.t_prime = 1000;
  CHECK(std::floor(param_matching(s, 0.25, same).t_cond) == param_matching(s, 0.25, same).t_cond);
}

TEST_CASE("VE matching picks the nearest native level") {
  const NoiseSchedule s = NoiseSchedule::ve({0.1, 0.2, 0.4, 0.8});
  CHECK(param_matching(s, 0.29).t_cond == 2.0);
  CHECK(param_matching(s, 0.31).t_cond == 3.0);
  CHECK(param_matching(s, 0.3).t_cond == 2.0);  // tie goes low
  const ParamMatch m = param_matching(s, 0.5);
  CHECK(m.sigma_achieved == 0.4);
  CHECK(m.c == 1.0);
  CHECK(m.bracket_gap == doctest::Approx(0.4));
}

TEST_CASE("out-of-range policy") {
  const NoiseSchedule s = NoiseSchedule::ve({0.1, 0.2, 0.4, 0.8});
  CHECK_THROWS_AS(param_matching(s, 0.05), RangeError);
  CHECK_THROWS_AS(param_matching(s, 1.0), RangeError);
  CHECK_THROWS_AS(param_matching(s, -0.1), ParameterError);
  MatchOptions lenient;
  lenient.range = RangePolicy::Lenient;
  const ParamMatch lo = param_matching(s, 0.05, lenient);
  CHECK(lo.clamped);
  CHECK(lo.sigma_achieved == 0.1);
  CHECK(lo.sigma_requested == 0.05);
  const ParamMatch hi = param_matching(s, 5.0, lenient);
  CHECK(hi.clamped);
  CHECK(hi.t_cond == 4.0);
  const NoiseSchedule vp = NoiseSchedule::vp_linear(1e-4, 0.02, 1000);
  CHECK_THROWS_AS(param_matching(vp, 200.0), RangeError);
  CHECK(param_matching(vp, 200.0, lenient).t_cond == 1000.0);
}

TEST_CASE("schedule JSON round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "spnp-test-schedule";
  std::filesystem::create_directories(dir);
  for (const NoiseSchedule& s : {NoiseSchedule::vp_linear(1e-4, 0.02, 20), NoiseSchedule::ve_geometric(0.01, 3.0, 7)}) {
    const NoiseSchedule r = NoiseSchedule::from_json(s.to_json());
    CHECK(r.kind() == s.kind());
    CHECK(r.sigmas() == s.sigmas());
    save_schedule(s, dir / "s.json");
    CHECK(load_schedule(dir / "s.json").sigmas() == s.sigmas());
  }
  CHECK_THROWS_AS(NoiseSchedule::from_json({{"kind", "xx"}}), ConfigError);
}
