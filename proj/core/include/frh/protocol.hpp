#pragma once

#include "frh/backend.hpp"

#include <atomic>
#include <cstdint>
#include <iosfwd>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace frh {

/**
 * Wire protocol, one JSON object per line in each direction:
 *
 *   {"op":"meta"}                         -> {"ok":true,"d":D,"vocab":V,"bos":B,"eos":E,"causal":C}
 *   {"op":"tokenize","text":S}            -> {"ok":true,"tokens":[...]}
 *   {"op":"features","tokens":[...]}      -> {"ok":true,"hidden":[[d numbers] x t]}
 *   {"op":"topk","tokens":[...],"k":K}    -> {"ok":true,"cands":[{"t":id,"l":logit},...]}
 *
 * Any failure is answered with {"ok":false,"err":S}; the session stays open.
 */
std::string handle_request(Backend& backend, const std::string& line);

/// Answers requests from `in` on `out` until end of input.
void serve_stream(Backend& backend, std::istream& in, std::ostream& out);

/// Reference TCP server on 127.0.0.1. Connections are served on their own
/// threads; backend calls are serialized.
class TcpServer {
 public:
  /// port 0 picks an ephemeral port.
  TcpServer(Backend& backend, std::uint16_t port = 0);
  ~TcpServer();
  TcpServer(const TcpServer&) = delete;
  TcpServer& operator=(const TcpServer&) = delete;

  std::uint16_t port() const { return port_; }
  /// Accepts connections on a background thread.
  void start();
  /// Accepts on the calling thread until stop().
  void run();
  void stop();

 private:
  void serve_connection(int fd);

  Backend& backend_;
  std::mutex backend_mutex_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::thread accept_thread_;
  std::mutex workers_mutex_;
  std::vector<std::thread> workers_;
  std::vector<int> client_fds_;
};

}  // namespace frh
