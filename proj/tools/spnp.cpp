#include "spnp/adaptation.hpp"
#include "spnp/dsm.hpp"
#include "spnp/errors.hpp"
#include "spnp/experiment.hpp"
#include "spnp/image_io.hpp"
#include "spnp/mlp.hpp"
#include "spnp/schedule.hpp"
#include "spnp/verify.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace spnp;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitTransport = 4;

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

struct RunArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool strict = false;
  int workers = 0;
};

int cmd_run(const RunArgs& a) {
  ExperimentConfig cfg = load_experiment(a.config);
  if (a.seed) cfg.seed = *a.seed;
  if (!a.out_dir.empty()) cfg.out_dir = a.out_dir;
  if (a.strict) cfg.strict_range = true;
  if (a.workers > 0) cfg.workers = a.workers;
  const MetricsReport rep = run_experiment(cfg);
  std::ifstream txt(cfg.out_dir / "report.txt");
  std::cout << txt.rdbuf();
  if (rep.any_transport_failure()) return kExitTransport;
  return rep.any_failure() ? kExitSolver : 0;
}

struct MatchArgs {
  std::vector<double> sigmas;
  std::string schedule;
  std::string kind = "vp";
  int t_prime = 0;
  std::string interp = "linear";
  bool strict = false;
};

int cmd_match(const MatchArgs& a) {
  NoiseSchedule sched = !a.schedule.empty() ? load_schedule(a.schedule)
                        : a.kind == "ve"    ? NoiseSchedule::ve_geometric(0.002, 80.0, 1000)
                                            : NoiseSchedule::vp_linear(1e-4, 0.02, 1000);
  MatchOptions opts;
  opts.t_prime = a.t_prime;
  opts.range = a.strict ? RangePolicy::Strict : RangePolicy::Lenient;
  opts.interp = a.interp == "log" ? SigmaInterp::Log : SigmaInterp::Linear;
  std::cout << "sigma_requested,c,t_cond,sigma_achieved\n";
  for (double s : a.sigmas) {
    const ParamMatch m = param_matching(sched, s, opts);
    std::cout << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g}\n", m.sigma_requested, m.c, m.t_cond, m.sigma_achieved);
  }
  return 0;
}

struct DenoiseArgs {
  std::string image;
  double sigma = 0.0;
  std::string prior;
  std::string out_dir = ".";
  std::string output;
  bool strict = false;
};

int cmd_denoise(const DenoiseArgs& a) {
  PriorSpec spec;
  fs::path base = ".";
  if (!a.prior.empty()) {
    spec = PriorSpec::from_json(read_json(a.prior));
    base = fs::path(a.prior).parent_path();
  }
  const ResolvedPrior prior = resolve_prior(spec, base);
  const ImageTensor x = read_image(a.image);
  const ImageTensor d = (a.strict ? prior.strict : prior.lenient)->denoise(x, a.sigma);
  const fs::path out = a.output.empty() ? fs::path(a.out_dir) / (fs::path(a.image).stem().string() + "_denoised.png")
                                        : fs::path(a.output);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_image(d, out);
  std::cout << out.string() << '\n';
  return 0;
}

struct TrainArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

int cmd_train(const TrainArgs& a) {
  const nlohmann::json j = read_json(a.config);
  const double sep = j.value("separation", 1.5);
  const double std = j.value("std", 0.5);
  const int n = j.value("samples", 100000);
  const auto conventions = j.value("conventions", std::vector<std::string>{"ve", "vp"});
  const fs::path out = a.out_dir.empty() ? fs::path(j.value("out_dir", std::string("."))) : fs::path(a.out_dir);
  fs::create_directories(out);

  const GmmPrior prior = make_toy_gmm(sep, std);
  const Mat samples = sample_gmm(prior, n, j.value("sample_seed", std::uint64_t{7}));
  const NoiseSchedule ve = NoiseSchedule::ve_geometric(j.value("sigma_min", 0.1), j.value("sigma_max", 2.0),
                                                       j.value("T", 12));
  std::vector<double> levels;
  for (double s : ve.sigmas()) {
    if (s <= 2.0 * std + 1e-12) levels.push_back(s);
  }
  for (const auto& conv : conventions) {
    if (conv != "ve" && conv != "vp") throw ConfigError("conventions must be ve or vp, got '" + conv + "'");
    const NoiseSchedule sched = conv == "ve" ? ve : NoiseSchedule::vp_from_sigmas(ve.sigmas());
    DsmTrainConfig tc = j.contains("train") ? DsmTrainConfig::from_json(j.at("train")) : toy_training_config(sched.kind());
    if (a.seed) tc.seed = *a.seed;
    const TrainResult res = train_toy_score(samples, sched, tc);
    save_checkpoint(*res.net, out / fmt::format("toy_{}.ckpt", conv));
    std::ofstream loss(out / fmt::format("toy_{}_loss.csv", conv));
    loss << "step,loss\n";
    for (std::size_t i = 0; i < res.loss_history.size(); ++i) loss << i + 1 << ',' << res.loss_history[i] << '\n';

    const AdaptedDenoiser den(std::make_shared<MlpScore>(res.net));
    const ToyDenoiseReport rep = compare_on_grid(
        [&](const Vec& p, double s) { return den.denoise(ImageTensor::from_vector(p), s).data(); },
        [&](const Vec& p, double s) { return gmm_mmse_denoise(prior, p, s); }, levels, sep, std);
    std::cout << fmt::format("{}: checkpoint {}, final loss {:.5f}, max denoiser error {:.4f} component std\n", conv,
                             (out / fmt::format("toy_{}.ckpt", conv)).string(), res.loss_history.back(),
                             rep.max_error());
  }
  return 0;
}

struct VerifyArgs {
  std::vector<int> only;
  bool skip_training = false;
  std::string out_dir;
};

int cmd_verify(const VerifyArgs& a) {
  VerifyOptions opts;
  opts.skip_training = a.skip_training;
  if (!a.out_dir.empty()) opts.work_dir = a.out_dir;
  int failed = 0;
  std::vector<int> ids = a.only;
  if (ids.empty()) {
    for (int id = 1; id <= check_count(); ++id) ids.push_back(id);
  }
  for (int id : ids) {
    const CheckResult r = run_check(id, opts);
    std::cout << format_check(r) << std::endl;
    if (!r.passed) ++failed;
  }
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Score-based plug-and-play image restoration"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off");

  RunArgs run;
  auto* c_run = app.add_subcommand("run", "run an experiment config");
  c_run->add_option("config", run.config, "experiment JSON")->required()->check(CLI::ExistingFile);
  c_run->add_option("--seed", run.seed, "override the experiment seed");
  c_run->add_option("--out-dir", run.out_dir, "override the output directory");
  c_run->add_flag("--strict-range", run.strict, "fail instead of clamping out-of-range noise levels");
  c_run->add_option("--workers", run.workers, "parallel (image, method) cells");

  MatchArgs match;
  auto* c_match = app.add_subcommand("match-params", "print (c, t) matches for noise levels as CSV");
  c_match->add_option("--sigma", match.sigmas, "requested noise levels")->required();
  c_match->add_option("--schedule", match.schedule, "schedule JSON (default: linear VP, T=1000)");
  c_match->add_option("--kind", match.kind, "default schedule kind")->check(CLI::IsMember({"ve", "vp"}));
  c_match->add_option("--t-prime", match.t_prime, "extended sequence length (default 10 T)");
  c_match->add_option("--interp", match.interp, "sigma interpolation")->check(CLI::IsMember({"linear", "log"}));
  c_match->add_flag("--strict-range", match.strict, "fail instead of clamping");

  DenoiseArgs den;
  auto* c_den = app.add_subcommand("denoise", "denoise one image with the configured prior");
  c_den->add_option("image", den.image, "input image")->required()->check(CLI::ExistingFile);
  c_den->add_option("--sigma", den.sigma, "noise level in [0,1] units")->required();
  c_den->add_option("--prior", den.prior, "prior spec JSON (default: built-in patch GMM)");
  c_den->add_option("--out-dir", den.out_dir, "output directory");
  c_den->add_option("-o,--output", den.output, "output file");
  c_den->add_flag("--strict-range", den.strict, "fail instead of clamping");

  TrainArgs train;
  auto* c_train = app.add_subcommand("train-toy-score", "train the 2-D toy score networks");
  c_train->add_option("config", train.config, "training JSON")->required()->check(CLI::ExistingFile);
  c_train->add_option("--seed", train.seed, "override the training seed");
  c_train->add_option("--out-dir", train.out_dir, "where checkpoints and loss curves go");

  VerifyArgs ver;
  auto* c_ver = app.add_subcommand("verify", "run the oracle suites");
  c_ver->add_option("--only", ver.only, "criteria to run");
  c_ver->add_flag("--skip-training", ver.skip_training, "skip the training check");
  c_ver->add_option("--out-dir", ver.out_dir, "scratch directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfig;
  }
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*c_run) return cmd_run(run);
    if (*c_match) return cmd_match(match);
    if (*c_den) return cmd_denoise(den);
    if (*c_train) return cmd_train(train);
    if (*c_ver) return cmd_verify(ver);
  } catch (const TransportError& e) {
    spdlog::error("{}", e.what());
    return kExitTransport;
  } catch (const ConfigError& e) {
    spdlog::error("config: {}", e.what());
    return kExitConfig;
  } catch (const IoError& e) {
    spdlog::error("{}", e.what());
    return kExitConfig;
  } catch (const ParameterError& e) {
    spdlog::error("{}", e.what());
    return kExitConfig;
  } catch (const RangeError& e) {
    spdlog::error("{}", e.what());
    return kExitSolver;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
