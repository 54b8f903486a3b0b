#include "helpers.hpp"

#include "spnp/errors.hpp"
#include "spnp/experiment.hpp"
#include "spnp/image_io.hpp"
#include "spnp/remote_score.hpp"

#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>

using namespace spnp;
namespace fs = std::filesystem;

namespace {

nlohmann::json small_experiment() {
  return {
      {"name", "unit"},
      {"seed", 5},
      {"task",
       {{"kernel", {{"type", "gaussian"}, {"size", 3}, {"std", 1.0}}},
        {"noise_sigma", 0.02},
        {"synthetic", {{"count", 2}, {"height", 12}, {"width", 12}}}}},
      {"prior", {{"type", "analytic"}, {"patch", {2, 2}}, {"network", "mmse"}}},
      {"methods",
       {{{"method", "red"}, {"K", 5}},
        {{"method", "dpir"}, {"K", 5}, {"lambda", 1e-4}},
        {{"method", "pnp-admm"}, {"K", 5}, {"gamma", 0.05}}}},
  };
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("method entries expand over list-valued fields") {
  const auto specs = expand_method_entry({{"method", "red"}, {"tau", {1.0, 2.0}}, {"K", {3, 4, 5}}, {"gamma", 0.1}});
  REQUIRE(specs.size() == 6);
  std::set<std::string> names;
  for (const auto& s : specs) {
    names.insert(s.name);
    CHECK(s.config.method == Method::Red);
    CHECK(s.config.gamma == 0.1);
    CHECK(s.name.rfind("red[", 0) == 0);
  }
  CHECK(names.size() == 6);
  CHECK(names.count("red[K=3,tau=1.0]") == 1);
  const auto one = expand_method_entry({{"method", "dpir"}, {"name", "mine"}});
  REQUIRE(one.size() == 1);
  CHECK(one[0].name == "mine");
  CHECK(one[0].config.lambda == default_config(Method::Dpir).lambda);
  CHECK_THROWS_AS(expand_method_entry({{"tau", 1.0}}), ConfigError);
  CHECK_THROWS_AS(expand_method_entry({{"method", "red"}, {"tau", nlohmann::json::array()}}), ConfigError);
  CHECK_THROWS_AS(expand_method_entry({{"method", "nope"}}), ConfigError);
}

TEST_CASE("config validation") {
  nlohmann::json j = small_experiment();
  j["methods"].push_back({{"method", "red"}});
  CHECK_THROWS_AS(ExperimentConfig::from_json(j).validate(), ConfigError);

  j = small_experiment();
  j["task"].erase("synthetic");
  j["task"]["images"] = {"does-not-exist.png"};
  CHECK_THROWS_AS(ExperimentConfig::from_json(j).validate(), ConfigError);

  j = small_experiment();
  j["task"]["kernel"] = {{"file", "missing-kernel.txt"}};
  CHECK_THROWS_AS(ExperimentConfig::from_json(j).validate(), ConfigError);

  j = small_experiment();
  j["prior"]["network"] = "gan";
  CHECK_THROWS_AS(ExperimentConfig::from_json(j).validate(), ConfigError);

  j = small_experiment();
  j["methods"] = nlohmann::json::array();
  CHECK_THROWS_AS(ExperimentConfig::from_json(j).validate(), ConfigError);
  CHECK_NOTHROW(ExperimentConfig::from_json(small_experiment()).validate());
}

TEST_CASE("config hash tracks the resolved config") {
  const ExperimentConfig a = ExperimentConfig::from_json(small_experiment());
  ExperimentConfig b = a;
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  b.out_dir = "elsewhere";
  CHECK(config_hash(a) == config_hash(b));
  b.seed = 6;
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("a small run writes consistent reports") {
  const auto dir = testing::scratch("exp-run");
  ExperimentConfig cfg = ExperimentConfig::from_json(small_experiment());
  cfg.out_dir = dir / "a";
  const MetricsReport rep = run_experiment(cfg);
  CHECK(rep.rows.size() == 6);
  CHECK(rep.measurement.size() == 2);
  CHECK(rep.aggregates.size() == 4);
  CHECK(rep.aggregates.front().method == "measurement");
  CHECK_FALSE(rep.any_failure());
  CHECK_NOTHROW(rep.check_consistency());
  for (const char* f : {"report.csv", "report.txt", "timing.csv"}) CHECK(fs::exists(cfg.out_dir / f));
  CHECK(fs::exists(cfg.out_dir / "images"));
  CHECK(fs::exists(cfg.out_dir / "traces"));
  const std::string csv = slurp(cfg.out_dir / "report.csv");
  CHECK(csv.find("# config_hash: " + config_hash(cfg)) != std::string::npos);
  CHECK(csv.find("wall") == std::string::npos);

  // parallel cells give the same bytes
  cfg.out_dir = dir / "b";
  cfg.workers = 3;
  (void)run_experiment(cfg);
  CHECK(slurp(dir / "b" / "report.csv") == csv);
  CHECK(slurp(dir / "b" / "report.txt") == slurp(dir / "a" / "report.txt"));

  // a different seed changes the measurements
  cfg.out_dir = dir / "c";
  cfg.seed = 99;
  CHECK(run_experiment(cfg).aggregate("measurement").psnr != rep.aggregate("measurement").psnr);
}

TEST_CASE("tampered aggregates are caught") {
  const auto dir = testing::scratch("exp-tamper");
  ExperimentConfig cfg = ExperimentConfig::from_json(small_experiment());
  cfg.out_dir = dir;
  MetricsReport rep = run_experiment(cfg);
  rep.aggregates[1].psnr += 1e-6;
  CHECK_THROWS_AS(rep.check_consistency(), NumericError);
  CHECK_THROWS_AS((void)rep.aggregate("nope"), ParameterError);
}

TEST_CASE("a failing method is recorded and the run continues") {
  const auto dir = testing::scratch("exp-fail");
  nlohmann::json j = small_experiment();
  j["prior"]["network"] = "ve";
  j["strict_range"] = true;
  // starts far above the largest VE level
  j["methods"].push_back({{"method", "dpir"}, {"name", "too-noisy"}, {"K", 5}, {"sigma1", 500.0}, {"lambda", 1e-4}});
  ExperimentConfig cfg = ExperimentConfig::from_json(j);
  cfg.out_dir = dir;
  const MetricsReport rep = run_experiment(cfg);
  CHECK(rep.any_failure());
  CHECK_FALSE(rep.any_transport_failure());
  int failed = 0;
  for (const auto& r : rep.rows) {
    if (r.method == "too-noisy") {
      CHECK_FALSE(r.ok);
      CHECK(r.error.find("iteration 1") != std::string::npos);
      ++failed;
    } else {
      CHECK(r.ok);
    }
  }
  CHECK(failed == 2);
  CHECK(rep.aggregate("too-noisy").failed == 2);
  CHECK(slurp(dir / "report.csv").find("too-noisy") != std::string::npos);
}

TEST_CASE("image files and kernel files are read relative to the config") {
  const auto dir = testing::scratch("exp-files");
  GaussianRng rng(3);
  ImageTensor x(Shape{12, 12, 1});
  for (auto& v : x.data()) v = rng.uniform();
  write_image(x, dir / "img.png");
  std::ofstream(dir / "k.txt") << "3 3\n0 1 0\n1 4 1\n0 1 0\n";
  nlohmann::json j = small_experiment();
  j["task"].erase("synthetic");
  j["task"]["images"] = {"img.png"};
  j["task"]["kernel"] = {{"file", "k.txt"}};
  std::ofstream(dir / "exp.json") << j.dump(2);
  ExperimentConfig cfg = load_experiment(dir / "exp.json");
  cfg.out_dir = dir / "out";
  const MetricsReport rep = run_experiment(cfg);
  CHECK(rep.images == std::vector<std::string>{"img"});
  CHECK_FALSE(rep.any_failure());
}

TEST_CASE("an absent score server is a transport error") {
  int port = 0;
  {
    const auto p = std::make_shared<GaussianImagePrior>(GaussianPrior(Vec::Constant(4, 0.5), 0.2));
    const ScorePtr s = emulate_vp_network(p, NoiseSchedule::vp_linear(1e-4, 0.02, 10));
    ScoreServer server(s, describe_for_serving(*s));
    port = server.start();
    server.stop();
  }
  nlohmann::json j = small_experiment();
  j["prior"] = {{"type", "remote"}, {"host", "127.0.0.1"}, {"port", port}, {"timeout", 2.0}};
  ExperimentConfig cfg = ExperimentConfig::from_json(j);
  cfg.out_dir = testing::scratch("exp-remote");
  CHECK_THROWS_AS(run_experiment(cfg), TransportError);
}
