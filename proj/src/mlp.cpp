#include "spnp/mlp.hpp"

#include "spnp/errors.hpp"
#include "spnp/rng.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace spnp {

std::string_view to_string(Activation a) { return a == Activation::SiLU ? "silu" : "tanh"; }

Activation activation_from_string(std::string_view s) {
  if (s == "silu") return Activation::SiLU;
  if (s == "tanh") return Activation::Tanh;
  throw ConfigError(fmt::format("unknown activation '{}'", s));
}

MlpScoreNet::MlpScoreNet(int dim, std::vector<int> hidden, Activation act, Convention convention,
                         NoiseSchedule schedule)
    : dim_(dim), act_(act), convention_(convention), schedule_(std::move(schedule)) {
  if (dim < 1) throw ParameterError("network dimension must be >= 1");
  if (convention == Convention::NoiseLevelDirect) throw ConfigError("score networks are trained as VE or VP");
  const ScheduleKind want = convention == Convention::VE ? ScheduleKind::VE : ScheduleKind::VP;
  if (schedule_.kind() != want) throw ConfigError("network convention and schedule kind differ");
  widths_.push_back(dim + 1);
  for (int h : hidden) {
    if (h < 1) throw ParameterError("hidden widths must be positive");
    widths_.push_back(h);
  }
  widths_.push_back(dim);
  Eigen::Index off = 0;
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    layers_.push_back(Layer{off, widths_[l], widths_[l + 1]});
    off += static_cast<Eigen::Index>(widths_[l]) * widths_[l + 1] + widths_[l + 1];
  }
  params_ = Vec::Zero(off);
}

void MlpScoreNet::set_parameters(const Vec& p) {
  if (p.size() != params_.size()) {
    throw DimensionError(fmt::format("expected {} parameters, got {}", params_.size(), p.size()));
  }
  params_ = p;
}

void MlpScoreNet::initialize(std::uint64_t seed) {
  GaussianRng rng(seed);
  for (const auto& L : layers_) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(L.in));
    const Eigen::Index n = static_cast<Eigen::Index>(L.in) * L.out + L.out;
    for (Eigen::Index i = 0; i < n; ++i) params_[L.offset + i] = bound * (2.0 * rng.uniform() - 1.0);
  }
}

double MlpScoreNet::condition_of(double t) const {
  if (convention_ == Convention::VE) return std::log(schedule_.sigma_continuous(t));
  return t / schedule_.T();
}

namespace {

using MapMat = Eigen::Map<const Mat>;
using MapVec = Eigen::Map<const Vec>;

void activate(Activation a, const Mat& h, Mat& out, Mat* deriv) {
  if (a == Activation::Tanh) {
    out = h.array().tanh().matrix();
    if (deriv) *deriv = (1.0 - out.array().square()).matrix();
    return;
  }
  const Eigen::ArrayXXd s = (1.0 + (-h.array()).exp()).inverse();
  out = (h.array() * s).matrix();
  if (deriv) *deriv = (s * (1.0 + h.array() * (1.0 - s))).matrix();
}

}  // namespace

Mat MlpScoreNet::forward(const Mat& X, const Eigen::RowVectorXd& cond) const {
  if (X.rows() != dim_ || cond.size() != X.cols()) throw DimensionError("network input has the wrong shape");
  Mat a(dim_ + 1, X.cols());
  a.topRows(dim_) = X;
  a.row(dim_) = cond;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& L = layers_[l];
    const MapMat W(params_.data() + L.offset, L.out, L.in);
    const MapVec b(params_.data() + L.offset + static_cast<Eigen::Index>(L.in) * L.out, L.out);
    Mat h = W * a;
    h.colwise() += b;
    if (l + 1 == layers_.size()) return h;
    activate(act_, h, a, nullptr);
  }
  return a;
}

double MlpScoreNet::loss_and_gradient(const Mat& X, const Eigen::RowVectorXd& cond, const Mat& target,
                                      const Eigen::RowVectorXd& weight, Vec* grad) const {
  const Eigen::Index B = X.cols();
  if (B == 0) throw ParameterError("empty batch");
  if (target.rows() != dim_ || target.cols() != B || weight.size() != B) {
    throw DimensionError("loss targets have the wrong shape");
  }
  std::vector<Mat> acts;   // inputs to each layer
  std::vector<Mat> derivs; // activation derivatives of hidden layers
  acts.reserve(layers_.size());
  derivs.reserve(layers_.size());
  Mat a(dim_ + 1, B);
  a.topRows(dim_) = X;
  a.row(dim_) = cond;
  Mat out;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& L = layers_[l];
    const MapMat W(params_.data() + L.offset, L.out, L.in);
    const MapVec b(params_.data() + L.offset + static_cast<Eigen::Index>(L.in) * L.out, L.out);
    Mat h = W * a;
    h.colwise() += b;
    acts.push_back(std::move(a));
    if (l + 1 == layers_.size()) {
      out = std::move(h);
      break;
    }
    Mat d;
    a = Mat();
    activate(act_, h, a, grad ? &d : nullptr);
    derivs.push_back(std::move(d));
  }
  const Mat r = out - target;
  const double loss = ((r.array().square().colwise().sum()) * weight.array()).sum() / static_cast<double>(B);
  if (!grad) return loss;

  grad->setZero(params_.size());
  Mat G = r * (2.0 / static_cast<double>(B));
  G.array().rowwise() *= weight.array();
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const auto& L = layers_[l];
    Eigen::Map<Mat> dW(grad->data() + L.offset, L.out, L.in);
    Eigen::Map<Vec> db(grad->data() + L.offset + static_cast<Eigen::Index>(L.in) * L.out, L.out);
    dW.noalias() = G * acts[l].transpose();
    db = G.rowwise().sum();
    if (l == 0) break;
    const MapMat W(params_.data() + L.offset, L.out, L.in);
    Mat dA = W.transpose() * G;
    G = dA.cwiseProduct(derivs[l - 1]);
  }
  return loss;
}

MlpScore::MlpScore(std::shared_ptr<const MlpScoreNet> net) : net_(std::move(net)) {
  if (!net_) throw ParameterError("null network");
}

ImageTensor MlpScore::evaluate(const ImageTensor& x, double t) const {
  if (static_cast<int>(x.size()) != net_->dim()) {
    throw DimensionError(fmt::format("network expects {} values, got {}", net_->dim(), x.size()));
  }
  const int T = net_->schedule().T();
  if (net_->convention() == Convention::VE) {
    if (!(t >= 1.0) || t > T || t != std::floor(t)) {
      throw ConditionError(fmt::format("VE network accepts grid times 1..{} only, got {}", T, t));
    }
  } else if (!(t >= 0.0) || t > T) {
    throw ConditionError(fmt::format("VP network accepts times in [0, {}], got {}", T, t));
  }
  Eigen::RowVectorXd cond(1);
  cond[0] = net_->condition_of(t);
  const Mat out = net_->forward(x.data(), cond);
  return x.with_data(out.col(0));
}

std::string MlpScore::describe() const {
  std::string w;
  for (std::size_t i = 0; i < net_->widths().size(); ++i) w += (i ? "-" : "") + std::to_string(net_->widths()[i]);
  return fmt::format("mlp[{}]({}, {})", to_string(net_->convention()), w, to_string(net_->activation()));
}

namespace {

constexpr const char* kMagic = "SPNP-MLP v1";

}  // namespace

void save_checkpoint(const MlpScoreNet& net, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  std::vector<int> hidden(net.widths().begin() + 1, net.widths().end() - 1);
  nlohmann::json h{{"dim", net.dim()},
                   {"hidden", hidden},
                   {"activation", std::string(to_string(net.activation()))},
                   {"convention", std::string(to_string(net.convention()))},
                   {"conditioning", net.convention() == Convention::VE ? "log-sigma" : "t-over-T"},
                   {"schedule", net.schedule().to_json()},
                   {"param_count", net.parameter_count()}};
  out << kMagic << '\n' << h.dump() << '\n';
  const Vec& p = net.parameters();
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(p[i]);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    char buf[8];
    std::memcpy(buf, &bits, 8);
    out.write(buf, 8);
  }
  if (!out) throw IoError("failed writing " + path.string());
}

MlpScoreNet load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::string magic;
  std::string header;
  std::getline(in, magic);
  if (magic != kMagic) throw IoError(path.string() + " is not a score-network checkpoint");
  std::getline(in, header);
  try {
    const auto h = nlohmann::json::parse(header);
    MlpScoreNet net(h.at("dim").get<int>(), h.at("hidden").get<std::vector<int>>(),
                    activation_from_string(h.at("activation").get<std::string>()),
                    convention_from_string(h.at("convention").get<std::string>()),
                    NoiseSchedule::from_json(h.at("schedule")));
    const auto n = h.at("param_count").get<Eigen::Index>();
    if (n != net.parameter_count()) throw IoError("checkpoint parameter count disagrees with its architecture");
    Vec p(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      char buf[8];
      if (!in.read(buf, 8)) throw IoError("truncated checkpoint " + path.string());
      std::uint64_t bits = 0;
      std::memcpy(&bits, buf, 8);
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
      p[i] = std::bit_cast<double>(bits);
    }
    if (in.peek() != std::char_traits<char>::eof()) throw IoError("trailing bytes in checkpoint " + path.string());
    net.set_parameters(p);
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad checkpoint header in " + path.string() + ": " + e.what());
  }
}

}  // namespace spnp
