#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "fluxvm/agent/agent.hpp"

namespace fluxvm {

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;

  /// `host:port`; throws std::invalid_argument.
  static Endpoint parse(std::string_view text);
  std::string str() const;
};

/// Serves an Agent on one port. A connection whose first line starts with
/// `GET ` is upgraded to a WebSocket on `/ctl`; any other connection speaks
/// newline-delimited JSON. Each connection gets its own thread.
class AgentServer {
 public:
  AgentServer(Agent& agent, const Endpoint& where);
  ~AgentServer();
  AgentServer(const AgentServer&) = delete;
  AgentServer& operator=(const AgentServer&) = delete;

  /// Bound address; the port is resolved when 0 was requested.
  const Endpoint& endpoint() const noexcept { return bound_; }
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  Endpoint bound_;
};

/// Sends one request line over TCP and returns the response line.
std::string tcp_request(const Endpoint& where, std::string_view line);

/// Minimal synchronous WebSocket client for the `/ctl` endpoint.
class WsClient {
 public:
  explicit WsClient(const Endpoint& where, std::string_view path = "/ctl");
  ~WsClient();
  WsClient(const WsClient&) = delete;
  WsClient& operator=(const WsClient&) = delete;

  std::string request(std::string_view text);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace fluxvm
