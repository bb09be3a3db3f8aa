#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "trie_align/harness.hpp"
#include "trie_align/iws.hpp"

namespace trie_align::net {

class ConnectionError : public std::runtime_error {
 public:
  ConnectionError(const std::string& what, int attempts)
      : std::runtime_error(what), attempts_(attempts) {}
  [[nodiscard]] int attempts() const noexcept { return attempts_; }

 private:
  int attempts_;
};

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
};

// "host:port" or ":port" / "port". Throws std::invalid_argument.
[[nodiscard]] Endpoint parse_endpoint(const std::string& text);

// Blocking FIFO with a fixed capacity. push blocks while full; pop blocks
// while empty and returns nullopt once closed and drained.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity ? capacity : 1) {}

  bool push(T item) {
    std::unique_lock lock(mu_);
    not_full_.wait(lock, [&] { return closed_ || items_.size() < capacity_; });
    if (closed_) return false;
    items_.push_back(std::move(item));
    not_empty_.notify_one();
    return true;
  }

  std::optional<T> pop() {
    std::unique_lock lock(mu_);
    not_empty_.wait(lock, [&] { return closed_ || !items_.empty(); });
    if (items_.empty()) return std::nullopt;
    T item = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return item;
  }

  void close() {
    std::lock_guard lock(mu_);
    closed_ = true;
    not_empty_.notify_all();
    not_full_.notify_all();
  }

 private:
  std::size_t capacity_;
  std::mutex mu_;
  std::condition_variable not_empty_;
  std::condition_variable not_full_;
  std::deque<T> items_;
  bool closed_ = false;
};

// Client side of the frame protocol.
class TcpSink : public harness::EventSink {
 public:
  // Throws ConnectionError after retries failed attempts.
  TcpSink(const Endpoint& endpoint, int retries = 5, int retry_delay_ms = 100);
  ~TcpSink() override;
  TcpSink(const TcpSink&) = delete;
  TcpSink& operator=(const TcpSink&) = delete;

  double deliver(const harness::StreamFrame& frame) override;
  void send_line(const std::string& line);
  // Sends a {"cmd": ...} line and waits for the one-line JSON reply.
  nlohmann::json request(const std::string& cmd);
  void finish() override;

 private:
  int fd_ = -1;
  std::string pending_;
  std::string inbox_;
};

struct ServerOptions {
  Endpoint listen;
  std::size_t queue_capacity = 4096;
  // Print every processed event result (JSON line) to this callback.
  std::function<void(const EventResult&)> on_result;
};

// Accepts newline-delimited frames on TCP and feeds them into one engine.
// Lines {"cmd":"metrics"} are answered with a RunMetrics document;
// {"cmd":"shutdown"} stops the server.
class StreamServer {
 public:
  // Binds and listens; throws ConnectionError when that fails.
  StreamServer(Engine& engine, ServerOptions options);
  ~StreamServer();
  StreamServer(const StreamServer&) = delete;
  StreamServer& operator=(const StreamServer&) = delete;

  [[nodiscard]] std::uint16_t port() const noexcept { return port_; }
  [[nodiscard]] bool stopping() const noexcept { return stopping_.load(); }

  void start();
  void stop();
  // Blocks until the server has stopped and all queued frames are processed.
  void wait();
  [[nodiscard]] harness::RunMetrics metrics() const;

 private:
  struct Connection;
  struct Item {
    enum class Kind { frame, metrics } kind = Kind::frame;
    harness::StreamFrame frame;
    std::shared_ptr<Connection> reply_to;
  };

  void accept_loop();
  void read_loop(std::shared_ptr<Connection> conn);
  void consume();

  Engine& engine_;
  ServerOptions options_;
  int listen_fd_ = -1;
  int stop_pipe_[2] = {-1, -1};
  std::uint16_t port_ = 0;
  BoundedQueue<Item> queue_;
  harness::EngineSink sink_;
  std::atomic<bool> stopping_{false};
  std::atomic<std::uint64_t> skipped_{0};
  std::uint64_t events_ = 0;
  double idle_ms_ = 0.0;
  std::chrono::steady_clock::time_point started_;
  std::chrono::steady_clock::time_point finished_;
  mutable std::mutex metrics_mu_;
  std::thread acceptor_;
  std::thread consumer_;
  std::mutex readers_mu_;
  std::vector<std::thread> readers_;
  bool joined_ = false;
};

}  // namespace trie_align::net
