#include "frh/protocol.hpp"

#include "fd_io.hpp"
#include "frh/errors.hpp"

#include <nlohmann/json.hpp>

#include <istream>
#include <ostream>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

namespace frh {
using nlohmann::json;

namespace {

TokenIds tokens_field(const json& req) {
  if (!req.contains("tokens") || !req["tokens"].is_array()) {
    throw DomainError("'tokens' must be an array of integers");
  }
  TokenIds ids;
  for (const auto& v : req["tokens"]) {
    if (!v.is_number_integer()) throw DomainError("'tokens' must be an array of integers");
    ids.push_back(v.get<TokenId>());
  }
  return ids;
}

json dispatch(Backend& backend, const json& req) {
  if (!req.is_object() || !req.contains("op") || !req["op"].is_string()) {
    throw DomainError("request must be an object with a string 'op'");
  }
  const std::string op = req["op"].get<std::string>();
  json reply = {{"ok", true}};
  if (op == "meta") {
    const BackendMeta m = backend.meta();
    reply["d"] = m.d;
    reply["vocab"] = m.vocab_size;
    reply["bos"] = m.bos ? json(*m.bos) : json(nullptr);
    reply["eos"] = m.eos ? json(*m.eos) : json(nullptr);
    reply["causal"] = m.causal;
  } else if (op == "tokenize") {
    if (!req.contains("text") || !req["text"].is_string()) throw DomainError("'text' must be a string");
    reply["tokens"] = backend.tokenize(req["text"].get<std::string>());
  } else if (op == "features") {
    const Matrix hidden = backend.features(tokens_field(req));
    json rows = json::array();
    for (Index t = 0; t < hidden.cols(); ++t) {
      json row = json::array();
      for (Index i = 0; i < hidden.rows(); ++i) row.push_back(hidden(i, t));
      rows.push_back(std::move(row));
    }
    reply["hidden"] = std::move(rows);
  } else if (op == "topk") {
    if (!req.contains("k") || !req["k"].is_number_integer()) throw DomainError("'k' must be an integer");
    json cands = json::array();
    for (const Candidate& c : backend.top_k(tokens_field(req), req["k"].get<int>())) {
      cands.push_back({{"t", c.token}, {"l", c.logit}});
    }
    reply["cands"] = std::move(cands);
  } else {
    throw DomainError("unknown op '" + op + "'");
  }
  return reply;
}

}  // namespace

std::string handle_request(Backend& backend, const std::string& line) {
  try {
    return dispatch(backend, json::parse(line)).dump();
  } catch (const std::exception& e) {
    return json{{"ok", false}, {"err", e.what()}}.dump();
  }
}

void serve_stream(Backend& backend, std::istream& in, std::ostream& out) {
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    out << handle_request(backend, line) << '\n';
    out.flush();
  }
}

TcpServer::TcpServer(Backend& backend, std::uint16_t port) : backend_(backend) {
  detail::ignore_sigpipe();
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw BackendError("server: socket() failed");
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
      ::listen(listen_fd_, 16) != 0) {
    ::close(listen_fd_);
    throw BackendError("server: cannot listen on port " + std::to_string(port));
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

TcpServer::~TcpServer() {
  stop();
  if (accept_thread_.joinable()) accept_thread_.join();
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(workers_mutex_);
    workers.swap(workers_);
  }
  for (auto& w : workers) {
    if (w.joinable()) w.join();
  }
}

void TcpServer::start() {
  accept_thread_ = std::thread([this] { run(); });
}

void TcpServer::run() {
  while (!stopping_) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (stopping_) break;
      continue;
    }
    std::lock_guard lock(workers_mutex_);
    client_fds_.push_back(fd);
    workers_.emplace_back([this, fd] { serve_connection(fd); });
  }
}

void TcpServer::stop() {
  if (stopping_.exchange(true)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  std::lock_guard lock(workers_mutex_);
  for (int fd : client_fds_) ::shutdown(fd, SHUT_RDWR);
}

void TcpServer::serve_connection(int fd) {
  detail::FdLineReader reader(fd);
  std::string line;
  while (reader.read_line(line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string reply;
    {
      std::lock_guard lock(backend_mutex_);
      reply = handle_request(backend_, line);
    }
    if (!detail::write_all(fd, reply + "\n", true)) break;
  }
  {
    std::lock_guard lock(workers_mutex_);
    std::erase(client_fds_, fd);
  }
  ::close(fd);
}

}  // namespace frh
