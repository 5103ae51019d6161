#pragma once

#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "roiedge/protocol.hpp"
#include "roiedge/sim.hpp"

// Stream-socket transport for the device/edge protocol. One in-order
// connection per device; the server gives each connection its own thread.
namespace roiedge {

namespace detail {

inline std::string errno_text() { return std::strerror(errno); }

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  Fd(Fd&& o) noexcept : fd_(o.release()) {}
  Fd& operator=(Fd&& o) noexcept {
    if (this != &o) {
      reset();
      fd_ = o.release();
    }
    return *this;
  }
  ~Fd() { reset(); }

  int get() const noexcept { return fd_; }
  int release() noexcept { return std::exchange(fd_, -1); }
  void reset() noexcept {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

inline void send_all(int fd, std::span<const std::uint8_t> bytes) {
  std::size_t off = 0;
  while (off < bytes.size()) {
    const ssize_t n = ::send(fd, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw IoError("send failed: " + errno_text());
    }
    off += static_cast<std::size_t>(n);
  }
}

// Fills buf completely. Returns the number of bytes read before EOF.
inline std::size_t recv_exact(int fd, std::span<std::uint8_t> buf) {
  std::size_t off = 0;
  while (off < buf.size()) {
    const ssize_t n = ::recv(fd, buf.data() + off, buf.size() - off, 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw IoError("recv failed: " + errno_text());
    }
    if (n == 0) break;
    off += static_cast<std::size_t>(n);
  }
  return off;
}

}  // namespace detail

inline void write_message(int fd, const Message& m) { detail::send_all(fd, encode_message(m)); }

// nullopt on a clean close between messages; ProtocolError if the peer
// closes mid-frame or sends a bad frame.
inline std::optional<Message> read_message(int fd) {
  std::uint8_t header[kFrameHeaderSize];
  const std::size_t got = detail::recv_exact(fd, header);
  if (got == 0) return std::nullopt;
  if (got < kFrameHeaderSize) throw ProtocolError("connection closed inside frame header", got);
  const std::uint32_t n = decode_frame_length(header);
  std::vector<std::uint8_t> body(n);
  const std::size_t body_got = detail::recv_exact(fd, body);
  if (body_got < n) throw ProtocolError("connection closed inside frame body", kFrameHeaderSize + body_got);
  return decode_body(body);
}

// Serves box messages with the in-process oracle.
class EdgeServer {
 public:
  // port 0 picks a free port; see port().
  EdgeServer(const GroundTruth& gt, const RunConfig& cfg, const std::string& host, int port) : gt_(gt), cfg_(cfg) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = AI_PASSIVE;
    addrinfo* res = nullptr;
    const std::string service = std::to_string(port);
    if (const int rc = ::getaddrinfo(host.empty() ? nullptr : host.c_str(), service.c_str(), &hints, &res); rc != 0)
      throw IoError("cannot resolve " + host + ": " + ::gai_strerror(rc));
    detail::Fd fd(::socket(res->ai_family, res->ai_socktype, res->ai_protocol));
    if (fd.get() < 0) {
      ::freeaddrinfo(res);
      throw IoError("socket failed: " + detail::errno_text());
    }
    const int one = 1;
    ::setsockopt(fd.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    const int rc = ::bind(fd.get(), res->ai_addr, res->ai_addrlen);
    ::freeaddrinfo(res);
    if (rc < 0) throw IoError("bind to " + host + ":" + service + " failed: " + detail::errno_text());
    if (::listen(fd.get(), 16) < 0) throw IoError("listen failed: " + detail::errno_text());
    sockaddr_in bound{};
    socklen_t len = sizeof bound;
    ::getsockname(fd.get(), reinterpret_cast<sockaddr*>(&bound), &len);
    port_ = ntohs(bound.sin_port);
    listen_ = std::move(fd);
  }

  ~EdgeServer() {
    stop();
    for (auto& t : workers_)
      if (t.joinable()) t.join();
  }

  int port() const noexcept { return port_; }

  // Accepts connections until stop() or until max_connections have been
  // accepted (0 = unlimited), then waits for their handlers to finish.
  void serve(std::size_t max_connections = 0) {
    std::size_t accepted = 0;
    while (!stopping_ && (max_connections == 0 || accepted < max_connections)) {
      const int c = ::accept(listen_.get(), nullptr, nullptr);
      if (c < 0) {
        if (errno == EINTR) continue;
        if (stopping_) break;
        throw IoError("accept failed: " + detail::errno_text());
      }
      ++accepted;
      workers_.emplace_back([this, c] { handle(detail::Fd(c)); });
    }
    for (auto& t : workers_)
      if (t.joinable()) t.join();
  }

  void stop() {
    stopping_ = true;
    if (listen_.get() >= 0) ::shutdown(listen_.get(), SHUT_RDWR);
  }

  // Errors raised by connection handlers, in arrival order.
  std::vector<std::string> errors() const {
    std::lock_guard lock(mu_);
    return errors_;
  }

 private:
  void handle(detail::Fd conn) {
    try {
      LocalEdge edge(gt_, cfg_);
      while (auto msg = read_message(conn.get())) {
        const auto* box = std::get_if<BoxMessage>(&*msg);
        if (box == nullptr) throw ProtocolError("edge expects box messages", 0);
        write_message(conn.get(), edge.process(*box));
      }
    } catch (const std::exception& e) {
      std::lock_guard lock(mu_);
      errors_.push_back(e.what());
    }
  }

  const GroundTruth& gt_;
  RunConfig cfg_;
  detail::Fd listen_;
  int port_ = 0;
  std::atomic<bool> stopping_{false};
  std::vector<std::thread> workers_;
  mutable std::mutex mu_;
  std::vector<std::string> errors_;
};

// Device side: each box is one request/response round trip.
class RemoteEdge : public EdgeEndpoint {
 public:
  RemoteEdge(const std::string& host, int port) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    const std::string service = std::to_string(port);
    if (const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0)
      throw IoError("cannot resolve " + host + ": " + ::gai_strerror(rc));
    detail::Fd fd(::socket(res->ai_family, res->ai_socktype, res->ai_protocol));
    const int rc = fd.get() < 0 ? -1 : ::connect(fd.get(), res->ai_addr, res->ai_addrlen);
    ::freeaddrinfo(res);
    if (rc < 0) throw IoError("cannot connect to " + host + ":" + service + ": " + detail::errno_text());
    const int one = 1;
    ::setsockopt(fd.get(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    fd_ = std::move(fd);
  }

  ResultMessage process(const BoxMessage& box) override {
    write_message(fd_.get(), box);
    auto reply = read_message(fd_.get());
    if (!reply) throw IoError("edge closed the connection");
    auto* result = std::get_if<ResultMessage>(&*reply);
    if (result == nullptr) throw ProtocolError("device expects result messages", 0);
    if (result->frame != box.frame || result->part != box.part) throw ProtocolError("result does not answer the request", 0);
    return std::move(*result);
  }

 private:
  detail::Fd fd_;
};

}  // namespace roiedge
