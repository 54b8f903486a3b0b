#include "helpers.hpp"

#include "spnp/adaptation.hpp"
#include "spnp/data_term.hpp"
#include "spnp/errors.hpp"
#include "spnp/measurement.hpp"
#include "spnp/metrics.hpp"
#include "spnp/solvers.hpp"

#include <doctest.h>

#include <fstream>

using namespace spnp;

namespace {

struct Problem {
  ImageTensor truth;
  QuadraticDataTerm dt;
  std::shared_ptr<MmseDenoiser> den;
};

Problem make_problem() {
  const auto prior =
      std::make_shared<PatchGmmPrior>(make_smooth_patch_gmm(4, 4, 1, 4, 0.2, 1.5, 0.02, 0.25, 0.75, 1), 4, 4, 1);
  GaussianRng rng(1);
  const ImageTensor x = prior->sample_image(Shape{16, 16, 1}, rng);
  const LinearOperator op = LinearOperator::circulant_blur(BlurKernel::gaussian(5, 1.2), 16, 16);
  const Measurement m = generate_measurement(x, op, 0.02, 2);
  return {x, QuadraticDataTerm(op, m.y), std::make_shared<MmseDenoiser>(prior)};
}

SolverConfig config_for(Method m) {
  SolverConfig c = default_config(m);
  c.K = 20;
  c.noise_sigma = 0.02;
  // data term is not divided by noise_sigma^2
  if (m == Method::PnpAdmm) c.gamma = 0.043;
  if (m == Method::Dpir) c.lambda = 0.27 * 0.02 * 0.02;
  return c;
}

class ThrowingDenoiser final : public Denoiser {
 public:
  ImageTensor denoise(const ImageTensor&, double) const override { throw NumericError("boom"); }
  std::string describe() const override { return "throws"; }
};

}  // namespace

TEST_CASE("method names round trip") {
  for (Method m : {Method::PnpAdmm, Method::Red, Method::Dpir, Method::DiffPir}) {
    CHECK(method_from_string(to_string(m)) == m);
  }
  CHECK_THROWS_AS(method_from_string("admm2"), ConfigError);
  for (GammaRule r : {GammaRule::Constant, GammaRule::OverSigma2, GammaRule::Sigma2OverLambda}) {
    CHECK(gamma_rule_from_string(to_string(r)) == r);
  }
}

TEST_CASE("default configs validate and serialize") {
  for (Method m : {Method::PnpAdmm, Method::Red, Method::Dpir, Method::DiffPir}) {
    SolverConfig c = config_for(m);
    CHECK_NOTHROW(c.validate());
    const SolverConfig r = SolverConfig::from_json(c.to_json());
    CHECK(r.to_json() == c.to_json());
  }
  SolverConfig c = default_config(Method::Red);
  c.update_from_json({{"tau", 0.5}, {"K", 7}});
  CHECK(c.tau == 0.5);
  CHECK(c.K == 7);
  CHECK(c.method == Method::Red);
  CHECK_THROWS_AS(c.update_from_json({{"K", "many"}}), ConfigError);
  CHECK_THROWS_AS(c.update_from_json({{"init", "random"}}), ConfigError);
}

TEST_CASE("config validation") {
  SolverConfig c = config_for(Method::PnpAdmm);
  c.K = 0;
  CHECK_THROWS_AS(c.validate(), ParameterError);
  c = config_for(Method::PnpAdmm);
  c.sigma1 = 0.01;
  c.sigmaK = 0.1;
  CHECK_THROWS_AS(c.validate(), ParameterError);
  c = config_for(Method::PnpAdmm);
  c.gamma = -1.0;
  CHECK_THROWS_AS(c.validate(), ParameterError);
  c = config_for(Method::DiffPir);
  c.zeta = 1.5;
  CHECK_THROWS_AS(c.validate(), ParameterError);
  c = config_for(Method::DiffPir);
  c.noise_sigma = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("log sigma schedule") {
  const auto s = make_log_sigma_schedule(0.2, 0.002, 11);
  REQUIRE(s.size() == 11);
  CHECK(s.front() == 0.2);
  CHECK(s.back() == 0.002);
  for (std::size_t i = 1; i < s.size(); ++i) CHECK(s[i] / s[i - 1] == doctest::Approx(std::pow(0.01, 0.1)));
  CHECK_THROWS_AS(make_log_sigma_schedule(0.1, 0.2, 5), ParameterError);
  CHECK_THROWS_AS(make_log_sigma_schedule(0.1, 0.01, 1), ParameterError);
  SolverConfig c;
  c.K = 4;
  c.sigma1 = c.sigmaK = 0.05;
  CHECK(config_sigmas(c) == std::vector<double>(4, 0.05));
}

TEST_CASE("every solver improves on the measurement") {
  const Problem p = make_problem();
  const double base = psnr(p.dt.y(), p.truth);
  for (Method m : {Method::PnpAdmm, Method::Red, Method::Dpir, Method::DiffPir}) {
    CAPTURE(to_string(m));
    const SolverConfig c = config_for(m);
    const SolverState st = solve(p.dt, *p.den, c, &p.truth);
    CHECK(st.trace.size() == static_cast<std::size_t>(c.K));
    CHECK(st.k == c.K);
    CHECK(st.reconstruction().all_finite());
    CHECK(psnr(st.reconstruction(), p.truth) > base);
    CHECK(st.trace.back().psnr == doctest::Approx(psnr(st.reconstruction(), p.truth)).epsilon(1e-9));
  }
}

TEST_CASE("solvers are deterministic") {
  const Problem p = make_problem();
  for (Method m : {Method::PnpAdmm, Method::Red, Method::Dpir, Method::DiffPir}) {
    SolverConfig c = config_for(m);
    c.zeta = m == Method::DiffPir ? 0.5 : 0.0;
    const SolverState a = solve(p.dt, *p.den, c);
    const SolverState b = solve(p.dt, *p.den, c);
    CHECK(norm(a.reconstruction() - b.reconstruction()) == 0.0);
  }
}

TEST_CASE("DiffPIR without injected noise ignores the seed") {
  const Problem p = make_problem();
  SolverConfig c = config_for(Method::DiffPir);
  c.zeta = 0.0;
  c.seed = 1;
  const ImageTensor a = diffpir_sample(p.dt, *p.den, c).reconstruction();
  c.seed = 999;
  const ImageTensor b = diffpir_sample(p.dt, *p.den, c).reconstruction();
  CHECK(norm(a - b) == 0.0);
  c.zeta = 0.3;
  const ImageTensor d = diffpir_sample(p.dt, *p.den, c).reconstruction();
  c.seed = 1;
  CHECK(norm(d - diffpir_sample(p.dt, *p.den, c).reconstruction()) > 0.0);
}

TEST_CASE("method-specific entry points check the config") {
  const Problem p = make_problem();
  CHECK_THROWS_AS(pnp_admm(p.dt, *p.den, config_for(Method::Red)), ConfigError);
  CHECK_THROWS_AS(red(p.dt, *p.den, config_for(Method::Dpir)), ConfigError);
  CHECK_THROWS_AS(dpir_hqs(p.dt, *p.den, config_for(Method::PnpAdmm)), ConfigError);
  CHECK_THROWS_AS(diffpir_sample(p.dt, *p.den, config_for(Method::Red)), ConfigError);
}

TEST_CASE("denoiser errors carry the iteration") {
  const Problem p = make_problem();
  const ThrowingDenoiser bad;
  try {
    (void)pnp_admm(p.dt, bad, config_for(Method::PnpAdmm));
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("iteration 1") != std::string::npos);
  }
}

TEST_CASE("trace CSV layout") {
  const Problem p = make_problem();
  const SolverConfig c = config_for(Method::Dpir);
  const SolverState st = dpir_hqs(p.dt, *p.den, c, &p.truth);
  const auto dir = testing::scratch("trace");
  write_trace_csv(st, c, dir / "t.csv", false);
  std::ifstream in(dir / "t.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line.rfind("# config: ", 0) == 0);
  CHECK(nlohmann::json::parse(line.substr(10)) == c.to_json());
  std::getline(in, line);
  CHECK(line == "k,sigma_k,gamma_k,residual,psnr");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == c.K);
}
