#pragma once

#include "spnp/score_function.hpp"
#include "spnp/wire.hpp"

#include <atomic>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <unordered_map>

namespace spnp {

struct ClientConfig {
  std::string host = "127.0.0.1";
  int port = 8765;
  double timeout_seconds = 30.0;
};

/// HTTP client for a score server. One connection per calling thread;
/// responses are matched to requests by request id.
class RemoteScoreClient {
 public:
  explicit RemoteScoreClient(ClientConfig config);
  ~RemoteScoreClient();
  RemoteScoreClient(const RemoteScoreClient&) = delete;
  RemoteScoreClient& operator=(const RemoteScoreClient&) = delete;

  /// GET /info. TransportError when unreachable, ProtocolError on a
  /// version or contract mismatch.
  [[nodiscard]] ServedModelInfo info() const;

  /// POST /score for one NCHW tensor (N = 1).
  [[nodiscard]] ImageTensor score(const ImageTensor& x, double t) const;

  [[nodiscard]] const ClientConfig& config() const { return config_; }

 private:
  struct Connection;
  Connection& connection() const;

  ClientConfig config_;
  mutable std::mutex mutex_;
  mutable std::unordered_map<std::thread::id, std::unique_ptr<Connection>> connections_;
  mutable std::atomic<std::uint64_t> next_id_{1};
};

/// ScoreFunction backed by a score server; convention, schedule and value
/// domain come from /info, fetched once at construction.
class RemoteScore final : public ScoreFunction {
 public:
  explicit RemoteScore(std::shared_ptr<const RemoteScoreClient> client);

  [[nodiscard]] Convention convention() const override { return info_.convention; }
  [[nodiscard]] const NoiseSchedule* schedule() const override { return info_.schedule ? &*info_.schedule : nullptr; }
  [[nodiscard]] ValueDomain value_domain() const override { return info_.value_domain; }
  [[nodiscard]] ImageTensor evaluate(const ImageTensor& x, double t) const override;
  [[nodiscard]] std::string describe() const override;
  [[nodiscard]] const ServedModelInfo& info() const { return info_; }

 private:
  std::shared_ptr<const RemoteScoreClient> client_;
  ServedModelInfo info_;
};

/// s(x, t) through a remote server.
ImageTensor remote_score(const RemoteScoreClient& client, const ImageTensor& x, double t);

/// In-process HTTP server exposing a local ScoreFunction with the same wire
/// contract. Used for loopback tests and as a reference implementation.
class ScoreServer {
 public:
  ScoreServer(ScorePtr score, ServedModelInfo info);
  ~ScoreServer();
  ScoreServer(const ScoreServer&) = delete;
  ScoreServer& operator=(const ScoreServer&) = delete;

  /// Binds to host:port (port 0 picks a free port) and serves on a
  /// background thread. Returns the bound port.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  void stop();
  [[nodiscard]] int port() const { return port_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

/// /info contract for a local score function.
ServedModelInfo describe_for_serving(const ScoreFunction& score);

}  // namespace spnp
