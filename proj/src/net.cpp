#include "trie_align/net.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

namespace trie_align::net {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

void write_all(int fd, std::string_view data) {
  while (!data.empty()) {
    const auto n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw ConnectionError(std::string("send failed: ") + std::strerror(errno), 1);
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

std::string errno_text() { return std::strerror(errno); }

}  // namespace

Endpoint parse_endpoint(const std::string& text) {
  Endpoint ep;
  std::string port_text = text;
  if (const auto colon = text.rfind(':'); colon != std::string::npos) {
    if (colon > 0) ep.host = text.substr(0, colon);
    port_text = text.substr(colon + 1);
  }
  try {
    std::size_t used = 0;
    const int port = std::stoi(port_text, &used);
    if (used != port_text.size() || port < 0 || port > 65535) throw std::invalid_argument("");
    ep.port = static_cast<std::uint16_t>(port);
  } catch (const std::exception&) {
    throw std::invalid_argument("bad address '" + text + "', expected host:port");
  }
  return ep;
}

TcpSink::TcpSink(const Endpoint& endpoint, int retries, int retry_delay_ms) {
  const int attempts = std::max(retries, 1);
  std::string last_error = "no attempt made";
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* found = nullptr;
    const std::string port = std::to_string(endpoint.port);
    if (const int rc = ::getaddrinfo(endpoint.host.c_str(), port.c_str(), &hints, &found); rc != 0) {
      last_error = ::gai_strerror(rc);
    } else {
      for (auto* ai = found; ai && fd_ < 0; ai = ai->ai_next) {
        const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd < 0) continue;
        if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
          fd_ = fd;
        } else {
          last_error = errno_text();
          ::close(fd);
        }
      }
      ::freeaddrinfo(found);
    }
    if (fd_ >= 0) break;
    spdlog::debug("connect attempt {}/{} to {}:{} failed: {}", attempt, attempts, endpoint.host, endpoint.port,
                  last_error);
    if (attempt < attempts) std::this_thread::sleep_for(std::chrono::milliseconds(retry_delay_ms));
  }
  if (fd_ < 0) {
    throw ConnectionError("cannot connect to " + endpoint.host + ":" + std::to_string(endpoint.port) + " after " +
                              std::to_string(attempts) + " attempts: " + last_error,
                          attempts);
  }
  const int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

TcpSink::~TcpSink() {
  if (fd_ >= 0) {
    try {
      finish();
    } catch (const std::exception&) {
    }
    ::close(fd_);
  }
}

double TcpSink::deliver(const harness::StreamFrame& frame) {
  const auto start = Clock::now();
  pending_ += harness::encode_frame(frame);
  pending_ += '\n';
  if (pending_.size() >= 64 * 1024) finish();
  return std::chrono::duration<double, std::micro>(Clock::now() - start).count();
}

void TcpSink::send_line(const std::string& line) {
  pending_ += line;
  pending_ += '\n';
  finish();
}

void TcpSink::finish() {
  if (pending_.empty()) return;
  write_all(fd_, pending_);
  pending_.clear();
}

json TcpSink::request(const std::string& cmd) {
  send_line(json{{"cmd", cmd}}.dump());
  while (true) {
    if (const auto nl = inbox_.find('\n'); nl != std::string::npos) {
      const std::string line = inbox_.substr(0, nl);
      inbox_.erase(0, nl + 1);
      return json::parse(line);
    }
    char buf[4096];
    const auto n = ::recv(fd_, buf, sizeof buf, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw ConnectionError("connection closed while waiting for '" + cmd + "' reply", 1);
    inbox_.append(buf, static_cast<std::size_t>(n));
  }
}

struct StreamServer::Connection {
  int fd = -1;
  std::mutex write_mu;

  explicit Connection(int f) : fd(f) {}
  ~Connection() {
    if (fd >= 0) ::close(fd);
  }
  void reply(const std::string& line) {
    std::lock_guard lock(write_mu);
    try {
      write_all(fd, line + "\n");
    } catch (const ConnectionError& e) {
      spdlog::warn("reply dropped: {}", e.what());
    }
  }
};

StreamServer::StreamServer(Engine& engine, ServerOptions options)
    : engine_(engine),
      options_(std::move(options)),
      queue_(options_.queue_capacity),
      sink_(engine_, options_.on_result) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* found = nullptr;
  const std::string port = std::to_string(options_.listen.port);
  if (const int rc = ::getaddrinfo(options_.listen.host.c_str(), port.c_str(), &hints, &found); rc != 0) {
    throw ConnectionError("cannot resolve " + options_.listen.host + ": " + ::gai_strerror(rc), 1);
  }
  std::string last_error = "no address";
  for (auto* ai = found; ai && listen_fd_ < 0; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    const int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd, 64) == 0) {
      listen_fd_ = fd;
    } else {
      last_error = errno_text();
      ::close(fd);
    }
  }
  ::freeaddrinfo(found);
  if (listen_fd_ < 0) {
    throw ConnectionError("cannot listen on " + options_.listen.host + ":" + port + ": " + last_error, 1);
  }
  sockaddr_storage bound{};
  socklen_t len = sizeof bound;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &len);
  port_ = bound.ss_family == AF_INET6 ? ntohs(reinterpret_cast<sockaddr_in6*>(&bound)->sin6_port)
                                      : ntohs(reinterpret_cast<sockaddr_in*>(&bound)->sin_port);
  if (::pipe(stop_pipe_) != 0) throw ConnectionError("pipe: " + errno_text(), 1);
}

StreamServer::~StreamServer() {
  stop();
  wait();
  if (listen_fd_ >= 0) ::close(listen_fd_);
  for (int fd : stop_pipe_) {
    if (fd >= 0) ::close(fd);
  }
}

void StreamServer::start() {
  started_ = Clock::now();
  consumer_ = std::thread([this] { consume(); });
  acceptor_ = std::thread([this] { accept_loop(); });
  spdlog::info("listening on {}:{}", options_.listen.host, port_);
}

void StreamServer::stop() {
  if (stopping_.exchange(true)) return;
  const char byte = 1;
  [[maybe_unused]] const auto n = ::write(stop_pipe_[1], &byte, 1);
}

void StreamServer::wait() {
  if (joined_) return;
  if (acceptor_.joinable()) acceptor_.join();
  {
    std::lock_guard lock(readers_mu_);
    for (auto& t : readers_) {
      if (t.joinable()) t.join();
    }
    readers_.clear();
  }
  queue_.close();
  if (consumer_.joinable()) consumer_.join();
  finished_ = Clock::now();
  joined_ = true;
}

void StreamServer::accept_loop() {
  while (!stopping_) {
    pollfd fds[2] = {{listen_fd_, POLLIN, 0}, {stop_pipe_[0], POLLIN, 0}};
    if (::poll(fds, 2, -1) < 0) {
      if (errno == EINTR) continue;
      spdlog::error("poll: {}", errno_text());
      break;
    }
    if (fds[1].revents) break;
    if (!(fds[0].revents & POLLIN)) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    auto conn = std::make_shared<Connection>(fd);
    std::lock_guard lock(readers_mu_);
    readers_.emplace_back([this, conn] { read_loop(conn); });
  }
}

void StreamServer::read_loop(std::shared_ptr<Connection> conn) {
  std::string buffer;
  char chunk[16 * 1024];
  auto handle_line = [&](std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) return;
    if (line.find("\"cmd\"") != std::string_view::npos) {
      const auto doc = json::parse(line, nullptr, false);
      if (doc.is_object() && doc.contains("cmd") && doc["cmd"].is_string()) {
        const auto cmd = doc["cmd"].get<std::string>();
        if (cmd == "metrics") {
          queue_.push(Item{Item::Kind::metrics, {}, conn});
        } else if (cmd == "shutdown") {
          spdlog::info("shutdown requested");
          stop();
        } else {
          skipped_.fetch_add(1);
          spdlog::warn("unknown command '{}' skipped", cmd);
        }
        return;
      }
    }
    try {
      queue_.push(Item{Item::Kind::frame, harness::decode_frame(line), nullptr});
    } catch (const harness::FrameError& e) {
      skipped_.fetch_add(1);
      spdlog::warn("skipped frame: {}", e.what());
    }
  };

  while (!stopping_) {
    pollfd fds[2] = {{conn->fd, POLLIN, 0}, {stop_pipe_[0], POLLIN, 0}};
    if (::poll(fds, 2, -1) < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (fds[0].revents == 0 && fds[1].revents) break;
    const auto n = ::recv(conn->fd, chunk, sizeof chunk, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    buffer.append(chunk, static_cast<std::size_t>(n));
    std::size_t start = 0;
    for (auto nl = buffer.find('\n', start); nl != std::string::npos; nl = buffer.find('\n', start)) {
      handle_line(std::string_view(buffer).substr(start, nl - start));
      start = nl + 1;
    }
    buffer.erase(0, start);
  }
  if (!buffer.empty()) handle_line(buffer);
}

void StreamServer::consume() {
  while (true) {
    const auto wait_start = Clock::now();
    auto item = queue_.pop();
    const double waited = std::chrono::duration<double, std::milli>(Clock::now() - wait_start).count();
    if (!item) break;
    if (item->kind == Item::Kind::metrics) {
      item->reply_to->reply(metrics().to_json().dump());
      continue;
    }
    std::lock_guard lock(metrics_mu_);
    idle_ms_ += waited;
    try {
      sink_.deliver(item->frame);
      ++events_;
    } catch (const std::exception& e) {
      skipped_.fetch_add(1);
      spdlog::warn("event rejected: {}", e.what());
    }
  }
}

harness::RunMetrics StreamServer::metrics() const {
  std::lock_guard lock(metrics_mu_);
  harness::RunMetrics m;
  sink_.fill(m);
  m.events = events_;
  m.skipped = skipped_.load();
  m.idle_ms = idle_ms_;
  const auto end = joined_ ? finished_ : Clock::now();
  m.wall_ms = std::chrono::duration<double, std::milli>(end - started_).count();
  return m;
}

}  // namespace trie_align::net
