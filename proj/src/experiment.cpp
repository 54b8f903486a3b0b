#include "spnp/experiment.hpp"

#include "spnp/errors.hpp"
#include "spnp/image_io.hpp"
#include "spnp/linear_operator.hpp"
#include "spnp/measurement.hpp"
#include "spnp/metrics.hpp"
#include "spnp/mlp.hpp"
#include "spnp/remote_score.hpp"
#include "spnp/rng.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <thread>

namespace spnp {

namespace fs = std::filesystem;

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

template <class T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

BlurKernel KernelSpec::build(const fs::path& base_dir) const {
  if (!file.empty()) return load_kernel(resolve(base_dir, file));
  if (type == "gaussian") return BlurKernel::gaussian(size, std);
  if (type == "box") return BlurKernel::box(size);
  if (type == "line") return BlurKernel::line(size, length, angle);
  if (type == "delta") return BlurKernel::delta();
  throw ConfigError("unknown kernel type '" + type + "'");
}

nlohmann::json KernelSpec::to_json() const {
  if (!file.empty()) return nlohmann::json{{"file", file}};
  nlohmann::json j{{"type", type}};
  if (type == "gaussian") {
    j["size"] = size;
    j["std"] = std;
  } else if (type == "box") {
    j["size"] = size;
  } else if (type == "line") {
    j["size"] = size;
    j["length"] = length;
    j["angle"] = angle;
  }
  return j;
}

KernelSpec KernelSpec::from_json(const nlohmann::json& j) {
  KernelSpec k;
  if (j.is_string()) {
    k.file = j.get<std::string>();
    return k;
  }
  read_field(j, "file", k.file);
  read_field(j, "type", k.type);
  read_field(j, "size", k.size);
  read_field(j, "std", k.std);
  read_field(j, "length", k.length);
  read_field(j, "angle", k.angle);
  return k;
}

nlohmann::json PriorSpec::to_json() const {
  nlohmann::json j{{"type", type}, {"patch", {patch_h, patch_w}}, {"channels", channels}};
  if (!gmm_file.empty()) {
    j["gmm"] = gmm_file;
  } else {
    j["gmm"] = nlohmann::json{{"components", smooth.components}, {"amplitude", smooth.amplitude},
                              {"length_scale", smooth.length_scale}, {"floor_std", smooth.floor_std},
                              {"mean_range", {smooth.mean_lo, smooth.mean_hi}}, {"seed", smooth.seed}};
  }
  if (type == "analytic") {
    j["network"] = network;
    if (!schedule.is_null()) j["schedule"] = schedule;
  } else if (type == "toy-checkpoint") {
    j["checkpoint"] = checkpoint;
  } else if (type == "remote") {
    j["host"] = host;
    j["port"] = port;
    j["timeout"] = timeout_seconds;
  }
  return j;
}

PriorSpec PriorSpec::from_json(const nlohmann::json& j) {
  PriorSpec p;
  read_field(j, "type", p.type);
  if (p.type != "analytic" && p.type != "toy-checkpoint" && p.type != "remote") {
    throw ConfigError("unknown prior type '" + p.type + "'");
  }
  if (j.contains("patch")) {
    const auto patch = j.at("patch").get<std::vector<int>>();
    if (patch.size() != 2) throw ConfigError("prior.patch must be [height, width]");
    p.patch_h = patch[0];
    p.patch_w = patch[1];
  }
  read_field(j, "channels", p.channels);
  if (j.contains("gmm")) {
    const auto& g = j.at("gmm");
    if (g.is_string()) {
      p.gmm_file = g.get<std::string>();
    } else {
      read_field(g, "components", p.smooth.components);
      read_field(g, "amplitude", p.smooth.amplitude);
      read_field(g, "length_scale", p.smooth.length_scale);
      read_field(g, "floor_std", p.smooth.floor_std);
      read_field(g, "seed", p.smooth.seed);
      if (g.contains("mean_range")) {
        const auto r = g.at("mean_range").get<std::vector<double>>();
        if (r.size() != 2) throw ConfigError("gmm.mean_range must be [lo, hi]");
        p.smooth.mean_lo = r[0];
        p.smooth.mean_hi = r[1];
      }
    }
  }
  read_field(j, "network", p.network);
  if (j.contains("schedule")) p.schedule = j.at("schedule");
  read_field(j, "checkpoint", p.checkpoint);
  read_field(j, "host", p.host);
  read_field(j, "port", p.port);
  read_field(j, "timeout", p.timeout_seconds);
  if (p.patch_h < 1 || p.patch_w < 1 || p.channels < 1) throw ConfigError("prior patch size and channels must be >= 1");
  return p;
}

std::vector<MethodSpec> expand_method_entry(const nlohmann::json& entry) {
  if (!entry.is_object() || !entry.contains("method")) throw ConfigError("each method entry needs a \"method\" field");
  const Method m = method_from_string(entry.at("method").get<std::string>());
  const std::string base = entry.value("name", std::string(to_string(m)));

  std::vector<std::string> swept;
  nlohmann::json fixed = nlohmann::json::object();
  for (const auto& [key, value] : entry.items()) {
    if (key == "name" || key == "method") continue;
    if (value.is_array()) {
      if (value.empty()) throw ConfigError(fmt::format("method '{}': empty list for '{}'", base, key));
      swept.push_back(key);
    } else {
      fixed[key] = value;
    }
  }

  std::vector<MethodSpec> out;
  std::vector<std::size_t> idx(swept.size(), 0);
  for (;;) {
    nlohmann::json fields = fixed;
    std::string suffix;
    for (std::size_t s = 0; s < swept.size(); ++s) {
      const auto& v = entry.at(swept[s])[idx[s]];
      fields[swept[s]] = v;
      suffix += fmt::format("{}{}={}", s ? "," : "", swept[s], v.dump());
    }
    MethodSpec spec;
    spec.name = swept.empty() ? base : base + "[" + suffix + "]";
    spec.config = default_config(m);
    try {
      spec.config.update_from_json(fields);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(fmt::format("method '{}': {}", spec.name, e.what()));
    }
    spec.seed_given = fields.contains("seed");
    spec.noise_given = fields.contains("noise_sigma");
    spec.range_given = fields.contains("strict_range");
    out.push_back(std::move(spec));

    std::size_t s = 0;
    for (; s < swept.size(); ++s) {
      if (++idx[s] < entry.at(swept[s]).size()) break;
      idx[s] = 0;
    }
    if (s == swept.size()) break;
  }
  return out;
}

void ExperimentConfig::validate() const {
  if (methods.empty()) throw ConfigError("experiment lists no methods");
  std::set<std::string> names;
  for (const auto& m : methods) {
    if (!names.insert(m.name).second) throw ConfigError("duplicate method name '" + m.name + "'");
  }
  if (task.images.empty() && !task.synthetic) throw ConfigError("task needs image files or a synthetic block");
  if (task.synthetic && (task.synthetic->count < 1 || task.synthetic->height < 1 || task.synthetic->width < 1)) {
    throw ConfigError("synthetic count and size must be positive");
  }
  if (!(task.noise_sigma >= 0.0)) throw ConfigError("noise_sigma must be >= 0");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  for (const auto& img : task.images) {
    if (!fs::exists(resolve(base_dir, img))) throw ConfigError("image file not found: " + img);
  }
  if (!task.kernel.file.empty() && !fs::exists(resolve(base_dir, task.kernel.file))) {
    throw ConfigError("kernel file not found: " + task.kernel.file);
  }
  if (!prior.gmm_file.empty() && !fs::exists(resolve(base_dir, prior.gmm_file))) {
    throw ConfigError("gmm file not found: " + prior.gmm_file);
  }
  if (prior.type == "toy-checkpoint" && !fs::exists(resolve(base_dir, prior.checkpoint))) {
    throw ConfigError("checkpoint not found: " + prior.checkpoint);
  }
  if (prior.type == "analytic" && prior.network != "ve" && prior.network != "vp" && prior.network != "direct" &&
      prior.network != "mmse") {
    throw ConfigError("prior.network must be ve, vp, direct or mmse");
  }
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json task_j{{"kernel", task.kernel.to_json()}, {"noise_sigma", task.noise_sigma}};
  if (!task.images.empty()) task_j["images"] = task.images;
  if (task.synthetic) {
    task_j["synthetic"] = {
        {"count", task.synthetic->count}, {"height", task.synthetic->height}, {"width", task.synthetic->width}};
  }
  nlohmann::json methods_j = nlohmann::json::array();
  for (const auto& m : methods) methods_j.push_back({{"name", m.name}, {"config", m.config.to_json()}});
  return nlohmann::json{{"name", name},           {"seed", seed},       {"strict_range", strict_range},
                        {"workers", workers},     {"task", task_j},     {"prior", prior.to_json()},
                        {"methods", methods_j}};
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j, const fs::path& base_dir) {
  ExperimentConfig c;
  c.base_dir = base_dir;
  try {
    read_field(j, "name", c.name);
    read_field(j, "seed", c.seed);
    read_field(j, "strict_range", c.strict_range);
    read_field(j, "workers", c.workers);
    if (j.contains("out_dir")) c.out_dir = resolve(base_dir, j.at("out_dir").get<std::string>());
    const auto& t = j.at("task");
    if (t.contains("kernel")) c.task.kernel = KernelSpec::from_json(t.at("kernel"));
    read_field(t, "noise_sigma", c.task.noise_sigma);
    read_field(t, "images", c.task.images);
    if (t.contains("synthetic")) {
      SyntheticSpec s;
      read_field(t.at("synthetic"), "count", s.count);
      read_field(t.at("synthetic"), "height", s.height);
      read_field(t.at("synthetic"), "width", s.width);
      c.task.synthetic = s;
    }
    if (j.contains("prior")) c.prior = PriorSpec::from_json(j.at("prior"));
    for (const auto& entry : j.at("methods")) {
      auto expanded = expand_method_entry(entry);
      c.methods.insert(c.methods.end(), expanded.begin(), expanded.end());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed experiment config: ") + e.what());
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
  return c;
}

ExperimentConfig load_experiment(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open experiment config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("experiment config " + path.string() + ": " + e.what());
  }
  return ExperimentConfig::from_json(j, path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

std::string config_hash(const ExperimentConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  nlohmann::json j = config.to_json();
  j.erase("workers");  // scheduling only, results do not depend on it
  for (const unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

bool MetricsReport::any_failure() const {
  for (const auto& r : rows) {
    if (!r.ok) return true;
  }
  return false;
}

bool MetricsReport::any_transport_failure() const {
  for (const auto& r : rows) {
    if (r.transport_failure) return true;
  }
  return false;
}

const AggregateRow& MetricsReport::aggregate(const std::string& method) const {
  for (const auto& a : aggregates) {
    if (a.method == method) return a;
  }
  throw ParameterError("no aggregate row for '" + method + "'");
}

namespace {

AggregateRow mean_of(const std::string& method, const std::vector<const ReportRow*>& rows) {
  AggregateRow a;
  a.method = method;
  for (const ReportRow* r : rows) {
    if (!r->ok) {
      ++a.failed;
      continue;
    }
    ++a.images;
    a.psnr += r->psnr;
    a.ssim += r->ssim;
    a.wall_ms += r->wall_ms;
    a.config = r->config;
  }
  if (a.images > 0) {
    a.psnr /= a.images;
    a.ssim /= a.images;
    a.wall_ms /= a.images;
  } else {
    a.psnr = a.ssim = a.wall_ms = std::nan("");
  }
  return a;
}

std::vector<AggregateRow> compute_aggregates(const MetricsReport& r) {
  std::vector<AggregateRow> out;
  std::vector<const ReportRow*> meas;
  for (const auto& m : r.measurement) meas.push_back(&m);
  out.push_back(mean_of("measurement", meas));
  std::vector<std::string> order;
  for (const auto& row : r.rows) {
    if (std::find(order.begin(), order.end(), row.method) == order.end()) order.push_back(row.method);
  }
  for (const auto& name : order) {
    std::vector<const ReportRow*> sel;
    for (const auto& row : r.rows) {
      if (row.method == name) sel.push_back(&row);
    }
    AggregateRow a = mean_of(name, sel);
    // Keep the config even when every cell failed.
    if (a.config.is_null() && !sel.empty()) a.config = sel.front()->config;
    out.push_back(std::move(a));
  }
  return out;
}

bool close(double a, double b) { return (std::isnan(a) && std::isnan(b)) || std::abs(a - b) <= 1e-9; }

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + '"';
}

std::string num(double v, int digits) { return std::isnan(v) ? std::string() : fmt::format("{:.{}f}", v, digits); }

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

}  // namespace

void MetricsReport::check_consistency() const {
  const auto fresh = compute_aggregates(*this);
  if (fresh.size() != aggregates.size()) throw NumericError("aggregate rows do not match the per-image rows");
  for (std::size_t i = 0; i < fresh.size(); ++i) {
    const auto& a = aggregates[i];
    const auto& b = fresh[i];
    if (a.method != b.method || a.images != b.images || !close(a.psnr, b.psnr) || !close(a.ssim, b.ssim)) {
      throw NumericError(fmt::format("aggregate for '{}' differs from the mean of its rows", a.method));
    }
  }
}

void MetricsReport::write_csv(const fs::path& path) const {
  check_consistency();
  auto out = open_out(path);
  out << "# spnp report\n";
  out << "# version: " << kLibraryVersion << '\n';
  out << "# config_hash: " << config_hash << '\n';
  out << "# seed: " << seed << '\n';
  out << "# prior: " << prior << '\n';
  out << "# task: " << task << '\n';
  out << "kind,method,image,psnr,psnr_capped,ssim,status,config\n";
  auto line = [&](const char* kind, const ReportRow& r) {
    out << kind << ',' << csv_quote(r.method) << ',' << r.image << ',' << (r.ok ? num(r.psnr, 6) : "") << ','
        << (r.psnr_capped ? 1 : 0) << ',' << (r.ok ? num(r.ssim, 6) : "") << ','
        << csv_quote(r.ok ? "ok" : "failed: " + r.error) << ',' << (r.config.is_null() ? "" : csv_quote(r.config.dump()))
        << '\n';
  };
  for (const auto& m : measurement) line("measurement", m);
  for (const auto& r : rows) line("cell", r);
  for (const auto& a : aggregates) {
    const std::string status = a.failed == 0 ? "ok" : fmt::format("failed {} of {}", a.failed, a.failed + a.images);
    out << "mean," << csv_quote(a.method) << ",all," << num(a.psnr, 6) << ",0," << num(a.ssim, 6) << ','
        << csv_quote(status) << ',' << (a.config.is_null() ? "" : csv_quote(a.config.dump())) << '\n';
  }
}

void MetricsReport::write_text(const fs::path& path) const {
  check_consistency();
  auto out = open_out(path);
  out << "config hash " << config_hash << ", seed " << seed << ", version " << kLibraryVersion << '\n';
  out << "prior: " << prior << '\n';
  out << "task: " << task << "\n\n";
  std::size_t w = 11;
  for (const auto& a : aggregates) w = std::max(w, a.method.size());
  out << fmt::format("{:<{}}  {:>8}  {:>7}  {:>6}\n", "Method", w, "PSNR", "SSIM", "images");
  for (const auto& a : aggregates) {
    const std::string name = a.method == "measurement" ? "Measurement" : a.method;
    out << fmt::format("{:<{}}  {:>8}  {:>7}  {:>6}", name, w, std::isnan(a.psnr) ? "-" : num(a.psnr, 2),
                       std::isnan(a.ssim) ? "-" : num(a.ssim, 4), a.images);
    if (a.failed) out << fmt::format("  ({} failed)", a.failed);
    out << '\n';
  }
  out << "\nper image\n";
  for (const auto& img : images) {
    out << img << '\n';
    for (const auto* group : {&measurement, &rows}) {
      for (const auto& r : *group) {
        if (r.image != img) continue;
        if (r.ok) {
          out << fmt::format("  {:<{}}  {:>8}  {:>7}{}\n", r.method, w, num(r.psnr, 2), num(r.ssim, 4),
                             r.psnr_capped ? "  (psnr capped)" : "");
        } else {
          out << fmt::format("  {:<{}}  failed: {}\n", r.method, w, r.error);
        }
      }
    }
  }
}

void MetricsReport::write_timing(const fs::path& path) const {
  auto out = open_out(path);
  out << "method,image,wall_ms\n";
  for (const auto& r : rows) out << csv_quote(r.method) << ',' << r.image << ',' << num(r.wall_ms, 3) << '\n';
  for (const auto& a : aggregates) {
    if (a.method != "measurement") out << csv_quote(a.method) << ",mean," << num(a.wall_ms, 3) << '\n';
  }
}

namespace {

GmmPrior build_patch_gmm(const PriorSpec& spec, const fs::path& base_dir) {
  const int d = spec.patch_h * spec.patch_w * spec.channels;
  GmmPrior g = spec.gmm_file.empty()
                   ? make_smooth_patch_gmm(spec.patch_h, spec.patch_w, spec.channels, spec.smooth.components,
                                           spec.smooth.amplitude, spec.smooth.length_scale, spec.smooth.floor_std,
                                           spec.smooth.mean_lo, spec.smooth.mean_hi, spec.smooth.seed)
                   : load_gmm(resolve(base_dir, spec.gmm_file));
  if (g.dim() != d) {
    throw ConfigError(fmt::format("patch GMM has dimension {}, patch {}x{}x{} needs {}", g.dim(), spec.patch_h,
                                  spec.patch_w, spec.channels, d));
  }
  return g;
}

NoiseSchedule default_schedule(const PriorSpec& spec) {
  if (!spec.schedule.is_null()) return NoiseSchedule::from_json(spec.schedule);
  if (spec.network == "ve") return NoiseSchedule::ve_geometric(0.005, 100.0, 1000);
  return NoiseSchedule::vp_linear(1e-4, 0.02, 1000);
}

}  // namespace

ResolvedPrior resolve_prior(const PriorSpec& spec, const fs::path& base_dir) {
  ResolvedPrior r;
  const std::string patch = fmt::format("{}x{}", spec.patch_h, spec.patch_w);
  if (spec.type == "analytic") {
    GmmPrior g = build_patch_gmm(spec, base_dir);
    const std::size_t K = g.components().size();
    r.analytic = std::make_shared<PatchGmmPrior>(std::move(g), spec.patch_h, spec.patch_w, spec.channels);
    const std::string what = fmt::format("patch GMM ({} components, {} patches; desk-scale stand-in for a "
                                         "whole-image network)",
                                         K, patch);
    if (spec.network == "mmse") {
      auto d = std::make_shared<MmseDenoiser>(r.analytic);
      r.strict = r.lenient = d;
      r.label = what + ", closed-form MMSE";
      return r;
    }
    if (spec.network == "direct") {
      r.score = std::make_shared<DirectAnalyticScore>(r.analytic);
    } else if (spec.network == "ve") {
      r.score = emulate_ve_network(r.analytic, default_schedule(spec));
    } else {
      r.score = emulate_vp_network(r.analytic, default_schedule(spec));
    }
    r.label = what + ", " + r.score->describe();
  } else if (spec.type == "toy-checkpoint") {
    auto net = std::make_shared<MlpScoreNet>(load_checkpoint(resolve(base_dir, spec.checkpoint)));
    if (net->dim() != spec.patch_h * spec.patch_w * spec.channels) {
      throw ConfigError(fmt::format("checkpoint dimension {} does not match patch {}x{}x{}", net->dim(),
                                    spec.patch_h, spec.patch_w, spec.channels));
    }
    r.score = std::make_shared<PatchLiftedScore>(std::make_shared<MlpScore>(net), spec.patch_h, spec.patch_w);
    r.label = "trained toy network, " + r.score->describe();
  } else {
    auto client = std::make_shared<RemoteScoreClient>(ClientConfig{spec.host, spec.port, spec.timeout_seconds});
    r.score = std::make_shared<RemoteScore>(client);
    r.label = r.score->describe();
  }
  AdaptOptions strict;
  strict.range = RangePolicy::Strict;
  AdaptOptions lenient;
  lenient.range = RangePolicy::Lenient;
  r.strict = std::make_shared<AdaptedDenoiser>(r.score, strict);
  r.lenient = std::make_shared<AdaptedDenoiser>(r.score, lenient);
  return r;
}

namespace {

struct Sample {
  std::string name;
  ImageTensor truth;
  ImageTensor y;
};

std::string file_safe(const std::string& s) {
  std::string out;
  for (char ch : s) {
    const bool keep = std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' || ch == '.';
    out += keep ? ch : '_';
  }
  return out;
}

std::vector<Sample> make_samples(const ExperimentConfig& config, const BlurKernel& kernel, const PriorSpec& prior) {
  std::vector<Sample> out;
  const std::uint64_t truth_seeds = derive_seed(config.seed, 1);
  const std::uint64_t noise_seeds = derive_seed(config.seed, 2);
  if (!config.task.images.empty()) {
    std::set<std::string> seen;
    for (const auto& f : config.task.images) {
      Sample s;
      s.name = file_safe(fs::path(f).stem().string());
      if (!seen.insert(s.name).second) throw ConfigError("two images share the name '" + s.name + "'");
      s.truth = read_image(resolve(config.base_dir, f));
      out.push_back(std::move(s));
    }
  } else {
    const auto& syn = *config.task.synthetic;
    const PatchGmmPrior sampler(build_patch_gmm(prior, config.base_dir), prior.patch_h, prior.patch_w,
                                prior.channels);
    for (int i = 0; i < syn.count; ++i) {
      GaussianRng rng(derive_seed(truth_seeds, static_cast<std::uint64_t>(i)));
      Sample s;
      s.name = fmt::format("synth{:02d}", i);
      s.truth = sampler.sample_image(Shape{syn.height, syn.width, prior.channels}, rng);
      out.push_back(std::move(s));
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto op = LinearOperator::circulant_blur(kernel, out[i].truth.height(), out[i].truth.width());
    out[i].y = generate_measurement(out[i].truth, op, config.task.noise_sigma, derive_seed(noise_seeds, i)).y;
  }
  return out;
}

}  // namespace

MetricsReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  const BlurKernel kernel = config.task.kernel.build(config.base_dir);
  const ResolvedPrior prior = resolve_prior(config.prior, config.base_dir);
  const std::vector<Sample> samples = make_samples(config, kernel, config.prior);

  fs::create_directories(config.out_dir / "images");
  fs::create_directories(config.out_dir / "traces");

  MetricsReport report;
  report.config_hash = config_hash(config);
  report.seed = config.seed;
  report.prior = prior.label;
  report.task = fmt::format("kernel {}, noise_sigma {:g}, {} image(s)", config.task.kernel.to_json().dump(),
                            config.task.noise_sigma, samples.size());

  for (const auto& s : samples) {
    report.images.push_back(s.name);
    const PsnrResult p = psnr_ex(s.y, s.truth);
    ReportRow r;
    r.method = "measurement";
    r.image = s.name;
    r.psnr = p.db;
    r.psnr_capped = p.capped;
    r.ssim = ssim(s.y, s.truth);
    report.measurement.push_back(std::move(r));
    write_image(s.truth, config.out_dir / "images" / (s.name + "_truth.png"));
    write_image(s.y, config.out_dir / "images" / (s.name + "_measurement.png"));
  }

  // Resolve every cell's exact config before running anything.
  const std::size_t M = config.methods.size();
  const std::size_t cells = samples.size() * M;
  const std::uint64_t solver_seeds = derive_seed(config.seed, 3);
  std::vector<SolverConfig> cell_config(cells);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t m = 0; m < M; ++m) {
      const MethodSpec& spec = config.methods[m];
      SolverConfig c = spec.config;
      if (!spec.seed_given) c.seed = derive_seed(solver_seeds, i * M + m);
      if (!spec.noise_given) c.noise_sigma = config.task.noise_sigma;
      if (!spec.range_given) c.strict_range = config.strict_range;
      cell_config[i * M + m] = c;
    }
  }

  std::vector<ReportRow> rows(cells);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t cell = next.fetch_add(1); cell < cells; cell = next.fetch_add(1)) {
      const Sample& s = samples[cell / M];
      const MethodSpec& spec = config.methods[cell % M];
      const SolverConfig& c = cell_config[cell];
      ReportRow& r = rows[cell];
      r.method = spec.name;
      r.image = s.name;
      r.config = c.to_json();
      const std::string stem = file_safe(spec.name) + "_" + s.name;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        c.validate();
        const QuadraticDataTerm dt(LinearOperator::circulant_blur(kernel, s.truth.height(), s.truth.width()), s.y);
        const Denoiser& den = c.strict_range ? *prior.strict : *prior.lenient;
        const SolverState st = solve(dt, den, c, &s.truth);
        r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        const ImageTensor& x = st.reconstruction();
        if (!x.all_finite()) throw NumericError("reconstruction is not finite");
        const PsnrResult p = psnr_ex(x, s.truth);
        r.psnr = p.db;
        r.psnr_capped = p.capped;
        r.ssim = ssim(x, s.truth);
        write_image(x, config.out_dir / "images" / (stem + ".png"));
        write_trace_csv(st, c, config.out_dir / "traces" / (stem + ".csv"));
      } catch (const TransportError& e) {
        r.ok = false;
        r.transport_failure = true;
        r.error = e.what();
      } catch (const std::exception& e) {
        r.ok = false;
        r.error = e.what();
      }
      if (!r.ok) {
        r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        spdlog::warn("{} on {} failed: {}", spec.name, s.name, r.error);
      } else {
        spdlog::info("{} on {}: psnr {:.2f} ssim {:.4f} ({:.0f} ms)", spec.name, s.name, r.psnr, r.ssim, r.wall_ms);
      }
    }
  };
  const int n_threads = std::min<int>(config.workers, static_cast<int>(std::max<std::size_t>(cells, 1)));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < n_threads; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  report.rows = std::move(rows);
  report.aggregates = compute_aggregates(report);

  report.write_csv(config.out_dir / "report.csv");
  report.write_text(config.out_dir / "report.txt");
  report.write_timing(config.out_dir / "timing.csv");
  return report;
}

}  // namespace spnp
