#pragma once

#include "spnp/adaptation.hpp"
#include "spnp/image.hpp"
#include "spnp/kernel.hpp"
#include "spnp/priors.hpp"
#include "spnp/score_function.hpp"
#include "spnp/solvers.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace spnp {

inline constexpr const char* kLibraryVersion = "0.1.0";

/// Blur kernel either read from a file or generated.
struct KernelSpec {
  std::string file;              ///< takes precedence when set
  std::string type = "gaussian"; ///< gaussian | box | line | delta
  int size = 7;
  double std = 1.6;
  double length = 5.0;
  double angle = 30.0;

  [[nodiscard]] BlurKernel build(const std::filesystem::path& base_dir) const;
  [[nodiscard]] nlohmann::json to_json() const;
  static KernelSpec from_json(const nlohmann::json& j);
};

struct SyntheticSpec {
  int count = 5;
  int height = 32;
  int width = 32;
};

struct TaskSpec {
  KernelSpec kernel;
  double noise_sigma = 0.02;
  std::vector<std::string> images;       ///< ground-truth files
  std::optional<SyntheticSpec> synthetic;  ///< used when no files are listed
};

/// Patch GMM generated on the fly (see make_smooth_patch_gmm).
struct SmoothGmmSpec {
  int components = 4;
  double amplitude = 0.2;
  double length_scale = 1.5;
  double floor_std = 0.02;
  double mean_lo = 0.25;
  double mean_hi = 0.75;
  std::uint64_t seed = 1;
};

/// analytic: patch GMM wrapped as a VE/VP network emulator, a direct score
///           or its closed-form MMSE denoiser ("network": ve | vp | direct | mmse).
/// toy-checkpoint: a trained score network lifted patch-wise.
/// remote: a score served over HTTP.
struct PriorSpec {
  std::string type = "analytic";
  int patch_h = 4;
  int patch_w = 4;
  int channels = 1;
  std::string gmm_file;
  SmoothGmmSpec smooth;
  std::string network = "vp";
  nlohmann::json schedule;  ///< null selects the linear VP / geometric VE default
  std::string checkpoint;
  std::string host = "127.0.0.1";
  int port = 8765;
  double timeout_seconds = 30.0;

  [[nodiscard]] nlohmann::json to_json() const;
  static PriorSpec from_json(const nlohmann::json& j);
};

/// One expanded method: a unique display name and the exact config used.
struct MethodSpec {
  std::string name;
  SolverConfig config;
  bool seed_given = false;
  bool noise_given = false;
  bool range_given = false;
};

/// Expands one method entry into the cartesian product of every field given
/// as a list. Names get a "[field=value,...]" suffix when expanded.
std::vector<MethodSpec> expand_method_entry(const nlohmann::json& entry);

struct ExperimentConfig {
  std::string name = "experiment";
  TaskSpec task;
  PriorSpec prior;
  std::vector<MethodSpec> methods;
  std::filesystem::path out_dir = "out";
  std::filesystem::path base_dir = ".";  ///< relative file references resolve here
  std::uint64_t seed = 0;
  bool strict_range = false;
  int workers = 1;

  /// ConfigError for duplicate method names, missing files, or an empty run.
  void validate() const;
  /// Resolved form, including every method's full SolverConfig.
  [[nodiscard]] nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = ".");
};

ExperimentConfig load_experiment(const std::filesystem::path& path);

/// 64-bit FNV-1a of the resolved config without the worker count, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

struct ReportRow {
  std::string method;
  std::string image;
  double psnr = 0.0;
  bool psnr_capped = false;
  double ssim = 0.0;
  double wall_ms = 0.0;
  bool ok = true;
  bool transport_failure = false;
  std::string error;
  nlohmann::json config;  ///< exact SolverConfig; null for measurement rows
};

struct AggregateRow {
  std::string method;
  int images = 0;  ///< rows that succeeded
  int failed = 0;
  double psnr = 0.0;
  double ssim = 0.0;
  double wall_ms = 0.0;
  nlohmann::json config;
};

struct MetricsReport {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string prior;
  std::string task;
  std::vector<std::string> images;
  std::vector<ReportRow> measurement;  ///< one per image, y against the truth
  std::vector<ReportRow> rows;         ///< image-major, then method order
  std::vector<AggregateRow> aggregates; ///< measurement first, then methods

  [[nodiscard]] bool any_failure() const;
  [[nodiscard]] bool any_transport_failure() const;
  /// Recomputes the means from the rows; NumericError beyond 1e-9.
  void check_consistency() const;
  [[nodiscard]] const AggregateRow& aggregate(const std::string& method) const;

  /// CSV without timings, byte-identical for a fixed config and seed.
  void write_csv(const std::filesystem::path& path) const;
  /// Table layout: Method | PSNR | SSIM, aggregate then per image.
  void write_text(const std::filesystem::path& path) const;
  void write_timing(const std::filesystem::path& path) const;
};

/// Everything the runner needs to evaluate one prior.
struct ResolvedPrior {
  ScorePtr score;        ///< null for the closed-form MMSE path
  DenoiserPtr strict;    ///< denoisers for the two range policies
  DenoiserPtr lenient;
  std::shared_ptr<const PatchGmmPrior> analytic;  ///< set for analytic priors
  std::string label;
};

/// Builds score and denoisers. TransportError when a remote server is absent.
ResolvedPrior resolve_prior(const PriorSpec& spec, const std::filesystem::path& base_dir);

/// Synthesizes measurements, runs every (image, method) cell, writes
/// reconstructions, traces and the reports under config.out_dir. Solver
/// errors are recorded per row and the run continues.
MetricsReport run_experiment(const ExperimentConfig& config);

}  // namespace spnp
