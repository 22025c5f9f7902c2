#include "fluxvm/agent/server.hpp"

#include <charconv>
#include <set>
#include <stdexcept>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <fmt/format.h>

namespace fluxvm {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

Endpoint Endpoint::parse(std::string_view text) {
  auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon == 0)
    throw std::invalid_argument(fmt::format("expected host:port, got '{}'", text));
  Endpoint e;
  e.host = std::string(text.substr(0, colon));
  auto port = text.substr(colon + 1);
  unsigned v = 0;
  auto [p, ec] = std::from_chars(port.data(), port.data() + port.size(), v);
  if (ec != std::errc() || p != port.data() + port.size() || v > 65535)
    throw std::invalid_argument(fmt::format("bad port in '{}'", text));
  e.port = static_cast<std::uint16_t>(v);
  return e;
}

std::string Endpoint::str() const { return fmt::format("{}:{}", host, port); }

namespace {

tcp::endpoint resolve(asio::io_context& io, const Endpoint& e) {
  tcp::resolver resolver(io);
  auto results = resolver.resolve(e.host, std::to_string(e.port));
  if (results.empty()) throw std::runtime_error("cannot resolve " + e.host);
  return *results.begin();
}

}  // namespace

struct AgentServer::Impl {
  Agent& agent;
  asio::io_context io;
  tcp::acceptor acceptor{io};
  std::thread accept_thread;
  std::mutex mu;
  std::set<tcp::socket*> open;
  std::vector<std::thread> workers;
  std::atomic<bool> stopping{false};

  explicit Impl(Agent& a) : agent(a) {}

  void serve_lines(tcp::socket& sock, beast::flat_buffer& buf) {
    for (;;) {
      auto data = static_cast<const char*>(buf.data().data());
      std::string_view view(data, buf.size());
      auto nl = view.find('\n');
      if (nl == std::string_view::npos) {
        auto n = sock.read_some(buf.prepare(4096));
        buf.commit(n);
        continue;
      }
      std::string line(view.substr(0, nl));
      buf.consume(nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      auto reply = agent.handle_line(line) + "\n";
      asio::write(sock, asio::buffer(reply));
    }
  }

  void serve_websocket(tcp::socket& sock, beast::flat_buffer& buf) {
    http::request<http::string_body> req;
    http::read(sock, buf, req);
    if (req.target() != "/ctl" || !websocket::is_upgrade(req)) {
      http::response<http::string_body> res{http::status::not_found, req.version()};
      res.set(http::field::content_type, "text/plain");
      res.body() = "fluxvm agent: WebSocket endpoint is /ctl\n";
      res.prepare_payload();
      http::write(sock, res);
      return;
    }
    websocket::stream<tcp::socket&> ws(sock);
    ws.accept(req);
    for (;;) {
      beast::flat_buffer msg;
      ws.read(msg);
      auto reply = agent.handle_line(beast::buffers_to_string(msg.data()));
      ws.text(true);
      ws.write(asio::buffer(reply));
    }
  }

  void serve(tcp::socket sock) {
    {
      std::lock_guard lock(mu);
      open.insert(&sock);
    }
    try {
      beast::flat_buffer buf;
      while (buf.size() < 4) {
        auto n = sock.read_some(buf.prepare(4096));
        buf.commit(n);
        std::string_view head(static_cast<const char*>(buf.data().data()), buf.size());
        if (head.find('\n') != std::string_view::npos) break;
      }
      std::string_view head(static_cast<const char*>(buf.data().data()), buf.size());
      if (head.substr(0, 4) == "GET ") {
        serve_websocket(sock, buf);
      } else {
        serve_lines(sock, buf);
      }
    } catch (const std::exception&) {
      // Peer closed or the server is stopping.
    }
    std::lock_guard lock(mu);
    open.erase(&sock);
  }

  void accept_loop() {
    while (!stopping) {
      tcp::socket sock(io);
      boost::system::error_code ec;
      acceptor.accept(sock, ec);
      if (ec) {
        if (stopping) return;
        continue;
      }
      std::lock_guard lock(mu);
      workers.emplace_back([this, s = std::move(sock)]() mutable { serve(std::move(s)); });
    }
  }
};

AgentServer::AgentServer(Agent& agent, const Endpoint& where) : impl_(std::make_unique<Impl>(agent)) {
  auto ep = resolve(impl_->io, where);
  impl_->acceptor.open(ep.protocol());
  impl_->acceptor.set_option(tcp::acceptor::reuse_address(true));
  impl_->acceptor.bind(ep);
  impl_->acceptor.listen();
  bound_ = Endpoint{where.host, impl_->acceptor.local_endpoint().port()};
  impl_->accept_thread = std::thread([this] { impl_->accept_loop(); });
}

AgentServer::~AgentServer() { stop(); }

void AgentServer::stop() {
  if (!impl_ || impl_->stopping.exchange(true)) return;
  boost::system::error_code ec;
  {
    // A blocking accept does not observe close(); wake it with a connection.
    asio::io_context io;
    tcp::socket poke(io);
    auto local = impl_->acceptor.local_endpoint(ec);
    if (!ec) {
      if (local.address().is_unspecified())
        local.address(local.address().is_v6() ? asio::ip::address(asio::ip::address_v6::loopback())
                                               : asio::ip::address(asio::ip::address_v4::loopback()));
      poke.connect(local, ec);
    }
  }
  if (impl_->accept_thread.joinable()) impl_->accept_thread.join();
  impl_->acceptor.close(ec);
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(impl_->mu);
    for (auto* s : impl_->open) s->shutdown(tcp::socket::shutdown_both, ec);
    workers.swap(impl_->workers);
  }
  for (auto& w : workers) w.join();
}

std::string tcp_request(const Endpoint& where, std::string_view line) {
  asio::io_context io;
  tcp::socket sock(io);
  sock.connect(resolve(io, where));
  std::string out(line);
  out += '\n';
  asio::write(sock, asio::buffer(out));
  asio::streambuf buf;
  asio::read_until(sock, buf, '\n');
  std::string reply{asio::buffers_begin(buf.data()), asio::buffers_end(buf.data())};
  reply.erase(reply.find('\n'));
  if (!reply.empty() && reply.back() == '\r') reply.pop_back();
  return reply;
}

struct WsClient::Impl {
  asio::io_context io;
  websocket::stream<tcp::socket> ws{io};
};

WsClient::WsClient(const Endpoint& where, std::string_view path) : impl_(std::make_unique<Impl>()) {
  impl_->ws.next_layer().connect(resolve(impl_->io, where));
  impl_->ws.handshake(fmt::format("{}:{}", where.host, where.port), std::string(path));
  impl_->ws.text(true);
}

WsClient::~WsClient() {
  boost::system::error_code ec;
  impl_->ws.close(websocket::close_code::normal, ec);
}

std::string WsClient::request(std::string_view text) {
  impl_->ws.write(asio::buffer(text.data(), text.size()));
  beast::flat_buffer buf;
  impl_->ws.read(buf);
  return beast::buffers_to_string(buf.data());
}

}  // namespace fluxvm
