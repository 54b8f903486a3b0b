#include "spnp/remote_score.hpp"

#include "spnp/errors.hpp"

#include <fmt/format.h>
#include <httplib.h>
#include <spdlog/spdlog.h>

#include <cmath>

namespace spnp {

struct RemoteScoreClient::Connection {
  httplib::Client http;
  Connection(const std::string& host, int port) : http(host, port) {}
};

RemoteScoreClient::RemoteScoreClient(ClientConfig config) : config_(std::move(config)) {
  if (config_.port <= 0 || config_.port > 65535) throw ConfigError("remote score: invalid port");
}

RemoteScoreClient::~RemoteScoreClient() = default;

RemoteScoreClient::Connection& RemoteScoreClient::connection() const {
  std::lock_guard lock(mutex_);
  auto& slot = connections_[std::this_thread::get_id()];
  if (!slot) {
    slot = std::make_unique<Connection>(config_.host, config_.port);
    const auto secs = static_cast<time_t>(config_.timeout_seconds);
    const auto usecs = static_cast<time_t>((config_.timeout_seconds - static_cast<double>(secs)) * 1e6);
    slot->http.set_connection_timeout(secs, usecs);
    slot->http.set_read_timeout(secs, usecs);
    slot->http.set_write_timeout(secs, usecs);
    slot->http.set_keep_alive(true);
  }
  return *slot;
}

namespace {

std::string endpoint(const ClientConfig& c) { return fmt::format("{}:{}", c.host, c.port); }

[[noreturn]] void raise_http_error(const httplib::Result& res, const ClientConfig& c, const char* path) {
  if (!res) {
    throw TransportError(fmt::format("score server {} unreachable on {}: {}", endpoint(c), path,
                                     httplib::to_string(res.error())));
  }
  std::string msg = res->body;
  try {
    const auto j = nlohmann::json::parse(res->body);
    msg = j.value("error", res->body);
    if (j.contains("field")) msg += fmt::format(" (field '{}')", j["field"].get<std::string>());
  } catch (const nlohmann::json::exception&) {
  }
  if (res->status == 409) throw ProtocolError(fmt::format("{} {}: protocol mismatch: {}", endpoint(c), path, msg));
  throw TransportError(fmt::format("{} {} returned HTTP {}: {}", endpoint(c), path, res->status, msg));
}

}  // namespace

ServedModelInfo RemoteScoreClient::info() const {
  httplib::Headers headers{{kProtocolHeader, std::to_string(kProtocolVersion)}};
  auto res = connection().http.Get("/info", headers);
  if (!res || res->status != 200) raise_http_error(res, config_, "/info");
  try {
    return ServedModelInfo::from_json(nlohmann::json::parse(res->body));
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("/info is not JSON: ") + e.what());
  }
}

ImageTensor RemoteScoreClient::score(const ImageTensor& x, double t) const {
  const std::string id = std::to_string(next_id_.fetch_add(1));
  nlohmann::json header{{"shape", {1, x.channels(), x.height(), x.width()}},
                        {"t", t},
                        {"request_id", id},
                        {"proto", kProtocolVersion}};
  const std::string body = encode_tensor_message(header, to_float32(x.data()));
  httplib::Headers headers{{kProtocolHeader, std::to_string(kProtocolVersion)}};
  auto res = connection().http.Post("/score", headers, body, "application/octet-stream");
  if (!res || res->status != 200) raise_http_error(res, config_, "/score");
  TensorMessage msg = decode_tensor_message(res->body);
  if (msg.header.value("request_id", std::string()) != id) {
    throw ProtocolError(fmt::format("response id '{}' does not match request '{}'",
                                    msg.header.value("request_id", std::string()), id));
  }
  const auto shape = msg.header["shape"].get<std::vector<std::int64_t>>();
  if (shape != std::vector<std::int64_t>{1, x.channels(), x.height(), x.width()}) {
    throw ProtocolError("response shape differs from request shape");
  }
  return x.with_data(from_float32(msg.data));
}

RemoteScore::RemoteScore(std::shared_ptr<const RemoteScoreClient> client)
    : client_(std::move(client)), info_(client_->info()) {
  if (info_.output_kind != "score") {
    throw ProtocolError("server reports output kind '" + info_.output_kind + "'; scores are required on the wire");
  }
  if (info_.convention != Convention::NoiseLevelDirect && !info_.schedule) {
    throw ProtocolError("server /info lacks the schedule of its VE/VP model");
  }
}

ImageTensor RemoteScore::evaluate(const ImageTensor& x, double t) const { return client_->score(x, t); }

std::string RemoteScore::describe() const {
  return fmt::format("remote({}, {}, T={})", endpoint(client_->config()), to_string(info_.convention), info_.T);
}

ImageTensor remote_score(const RemoteScoreClient& client, const ImageTensor& x, double t) { return client.score(x, t); }

ServedModelInfo describe_for_serving(const ScoreFunction& score) {
  ServedModelInfo info;
  info.convention = score.convention();
  info.value_domain = score.value_domain();
  if (const NoiseSchedule* s = score.schedule()) {
    info.schedule = *s;
    info.T = s->T();
  }
  info.t_policy = score.convention() == Convention::VE ? "grid-only" : "real-valued";
  return info;
}

struct ScoreServer::Impl {
  ScorePtr score;
  ServedModelInfo info;
  httplib::Server http;
  std::thread thread;
};

namespace {

void json_error(httplib::Response& res, int status, const std::string& msg, const std::string& field = {}) {
  nlohmann::json j{{"error", msg}};
  if (!field.empty()) j["field"] = field;
  res.status = status;
  res.set_content(j.dump(), "application/json");
}

}  // namespace

ScoreServer::ScoreServer(ScorePtr score, ServedModelInfo info) : impl_(std::make_unique<Impl>()) {
  if (!score) throw ParameterError("null score function");
  impl_->score = std::move(score);
  impl_->info = std::move(info);
  Impl* impl = impl_.get();

  impl->http.Get("/info", [impl](const httplib::Request&, httplib::Response& res) {
    res.set_header(kProtocolHeader, std::to_string(kProtocolVersion));
    res.set_content(impl->info.to_json().dump(), "application/json");
  });

  impl->http.Post("/score", [impl](const httplib::Request& req, httplib::Response& res) {
    res.set_header(kProtocolHeader, std::to_string(kProtocolVersion));
    if (req.get_header_value(kProtocolHeader) != std::to_string(kProtocolVersion)) {
      json_error(res, 409, fmt::format("expected {}: {}", kProtocolHeader, kProtocolVersion), kProtocolHeader);
      return;
    }
    TensorMessage msg;
    try {
      msg = decode_tensor_message(req.body);
    } catch (const ProtocolError& e) {
      json_error(res, 400, e.what(), "shape");
      return;
    }
    if (!msg.header.contains("t") || !msg.header["t"].is_number()) {
      json_error(res, 400, "missing numeric t", "t");
      return;
    }
    const double t = msg.header["t"].get<double>();
    if (impl->info.convention != Convention::NoiseLevelDirect && (!(t >= 0.0) || t > impl->info.T)) {
      json_error(res, 400, fmt::format("t={} outside [0, {}]", t, impl->info.T), "t");
      return;
    }
    const auto shape = msg.header["shape"].get<std::vector<std::int64_t>>();
    const auto N = shape[0];
    const auto C = static_cast<int>(shape[1]);
    const auto H = static_cast<int>(shape[2]);
    const auto W = static_cast<int>(shape[3]);
    const std::size_t per = static_cast<std::size_t>(C) * H * W;
    std::vector<float> out(msg.data.size());
    try {
      for (std::int64_t n = 0; n < N; ++n) {
        Eigen::VectorXd v(static_cast<Eigen::Index>(per));
        for (std::size_t i = 0; i < per; ++i) v[static_cast<Eigen::Index>(i)] = msg.data[n * per + i];
        const ImageTensor s = impl->score->evaluate(ImageTensor(Shape{H, W, C}, std::move(v)), t);
        for (std::size_t i = 0; i < per; ++i) out[n * per + i] = static_cast<float>(s.data()[static_cast<Eigen::Index>(i)]);
      }
    } catch (const DimensionError& e) {
      json_error(res, 400, e.what(), "shape");
      return;
    } catch (const ConditionError& e) {
      json_error(res, 400, e.what(), "t");
      return;
    } catch (const std::exception& e) {
      json_error(res, 500, e.what());
      return;
    }
    nlohmann::json header{{"shape", shape}, {"request_id", msg.header.value("request_id", std::string())},
                          {"proto", kProtocolVersion}};
    res.set_content(encode_tensor_message(header, out), "application/octet-stream");
  });
}

ScoreServer::~ScoreServer() { stop(); }

int ScoreServer::start(const std::string& host, int port) {
  if (impl_->thread.joinable()) throw ConfigError("score server already running");
  if (port == 0) {
    port_ = impl_->http.bind_to_any_port(host);
  } else {
    port_ = impl_->http.bind_to_port(host, port) ? port : -1;
  }
  if (port_ <= 0) throw TransportError(fmt::format("cannot bind score server to {}:{}", host, port));
  impl_->thread = std::thread([this] { impl_->http.listen_after_bind(); });
  impl_->http.wait_until_ready();
  spdlog::debug("score server listening on {}:{}", host, port_);
  return port_;
}

void ScoreServer::stop() {
  if (impl_ && impl_->thread.joinable()) {
    impl_->http.stop();
    impl_->thread.join();
  }
}

}  // namespace spnp
