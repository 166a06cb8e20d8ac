#include "fd_io.hpp"
#include "frh/backend.hpp"
#include "frh/errors.hpp"

#include <nlohmann/json.hpp>

#include <cerrno>
#include <charconv>

#include <netdb.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

namespace frh {
using nlohmann::json;

namespace {

class ProcessTransport : public LineTransport {
 public:
  explicit ProcessTransport(const std::string& command) {
    detail::ignore_sigpipe();
    int to_child[2];
    int from_child[2];
    if (::pipe(to_child) != 0) throw BackendError("exec: pipe() failed");
    if (::pipe(from_child) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      throw BackendError("exec: pipe() failed");
    }
    pid_ = ::fork();
    if (pid_ < 0) throw BackendError("exec: fork() failed");
    if (pid_ == 0) {
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::close(to_child[0]);
      ::close(to_child[1]);
      ::close(from_child[0]);
      ::close(from_child[1]);
      ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
    reader_ = std::make_unique<detail::FdLineReader>(read_fd_);
  }

  ~ProcessTransport() override {
    if (write_fd_ >= 0) ::close(write_fd_);
    if (read_fd_ >= 0) ::close(read_fd_);
    if (pid_ > 0) {
      int status = 0;
      ::waitpid(pid_, &status, 0);
    }
  }

  void send_line(const std::string& line) override {
    if (!detail::write_all(write_fd_, line + "\n", false)) {
      throw BackendError("exec: backend process closed its input");
    }
  }

  std::string receive_line() override {
    std::string line;
    if (!reader_->read_line(line)) throw BackendError("exec: backend process closed its output");
    return line;
  }

 private:
  pid_t pid_ = -1;
  int write_fd_ = -1;
  int read_fd_ = -1;
  std::unique_ptr<detail::FdLineReader> reader_;
};

class TcpTransport : public LineTransport {
 public:
  TcpTransport(const std::string& host, std::uint16_t port) {
    detail::ignore_sigpipe();
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    const std::string service = std::to_string(port);
    if (::getaddrinfo(host.c_str(), service.c_str(), &hints, &res) != 0) {
      throw BackendError("tcp: cannot resolve " + host);
    }
    for (addrinfo* p = res; p != nullptr; p = p->ai_next) {
      const int fd = ::socket(p->ai_family, p->ai_socktype, p->ai_protocol);
      if (fd < 0) continue;
      if (::connect(fd, p->ai_addr, p->ai_addrlen) == 0) {
        fd_ = fd;
        break;
      }
      ::close(fd);
    }
    ::freeaddrinfo(res);
    if (fd_ < 0) throw BackendError("tcp: cannot connect to " + host + ":" + service);
    reader_ = std::make_unique<detail::FdLineReader>(fd_);
  }

  ~TcpTransport() override {
    if (fd_ >= 0) ::close(fd_);
  }

  void send_line(const std::string& line) override {
    if (!detail::write_all(fd_, line + "\n", true)) throw BackendError("tcp: connection lost");
  }

  std::string receive_line() override {
    std::string line;
    if (!reader_->read_line(line)) throw BackendError("tcp: connection closed by server");
    return line;
  }

 private:
  int fd_ = -1;
  std::unique_ptr<detail::FdLineReader> reader_;
};

[[noreturn]] void violation(const std::string& what) {
  throw BackendError("protocol violation: " + what);
}

const json& field(const json& reply, const char* name) {
  if (!reply.contains(name)) violation(std::string("missing field '") + name + "'");
  return reply[name];
}

Index integer_field(const json& reply, const char* name) {
  const json& v = field(reply, name);
  if (!v.is_number_integer()) violation(std::string("field '") + name + "' is not an integer");
  return v.get<Index>();
}

std::optional<TokenId> optional_id(const json& reply, const char* name) {
  if (!reply.contains(name) || reply[name].is_null()) return std::nullopt;
  if (!reply[name].is_number_integer()) violation(std::string("field '") + name + "' is not an integer");
  return reply[name].get<TokenId>();
}

}  // namespace

struct RemoteBackend::Impl {
  std::unique_ptr<LineTransport> transport;
  std::optional<BackendMeta> meta;

  json call(const json& request) {
    transport->send_line(request.dump());
    const std::string line = transport->receive_line();
    json reply;
    try {
      reply = json::parse(line);
    } catch (const json::exception&) {
      violation("reply is not JSON");
    }
    if (!reply.is_object()) violation("reply is not an object");
    const json& ok = field(reply, "ok");
    if (!ok.is_boolean()) violation("'ok' is not a boolean");
    if (!ok.get<bool>()) {
      const std::string err =
          reply.contains("err") && reply["err"].is_string() ? reply["err"].get<std::string>() : "unspecified";
      throw BackendError("backend error: " + err);
    }
    return reply;
  }
};

RemoteBackend::RemoteBackend(std::unique_ptr<LineTransport> transport)
    : impl_(std::make_shared<Impl>()) {
  impl_->transport = std::move(transport);
}

BackendMeta RemoteBackend::meta() {
  if (impl_->meta) return *impl_->meta;
  const json reply = impl_->call({{"op", "meta"}});
  BackendMeta m;
  m.d = integer_field(reply, "d");
  m.vocab_size = integer_field(reply, "vocab");
  if (m.d <= 0 || m.vocab_size <= 0) violation("non-positive dimensions");
  m.bos = optional_id(reply, "bos");
  m.eos = optional_id(reply, "eos");
  if (reply.contains("causal")) {
    if (!reply["causal"].is_boolean()) violation("'causal' is not a boolean");
    m.causal = reply["causal"].get<bool>();
  }
  impl_->meta = m;
  return m;
}

TokenIds RemoteBackend::tokenize(std::string_view text) {
  const json reply = impl_->call({{"op", "tokenize"}, {"text", std::string(text)}});
  const json& arr = field(reply, "tokens");
  if (!arr.is_array()) violation("'tokens' is not an array");
  TokenIds ids;
  for (const auto& v : arr) {
    if (!v.is_number_integer()) violation("'tokens' holds a non-integer");
    ids.push_back(v.get<TokenId>());
  }
  return ids;
}

Matrix RemoteBackend::features(std::span<const TokenId> tokens) {
  if (tokens.empty()) throw DomainError("features: empty token sequence");
  const Index d = meta().d;
  const json reply =
      impl_->call({{"op", "features"}, {"tokens", TokenIds(tokens.begin(), tokens.end())}});
  const json& rows = field(reply, "hidden");
  if (!rows.is_array() || rows.size() != tokens.size()) violation("'hidden' must hold one row per token");
  Matrix hidden(d, static_cast<Index>(tokens.size()));
  for (std::size_t t = 0; t < rows.size(); ++t) {
    const json& row = rows[t];
    if (!row.is_array() || static_cast<Index>(row.size()) != d) violation("hidden row has wrong length");
    for (Index i = 0; i < d; ++i) {
      const json& v = row[static_cast<std::size_t>(i)];
      if (!v.is_number()) violation("hidden value is not a number");
      hidden(i, static_cast<Index>(t)) = static_cast<double>(static_cast<float>(v.get<double>()));
    }
  }
  return hidden;
}

std::vector<Candidate> RemoteBackend::top_k(std::span<const TokenId> tokens, int k) {
  if (k < 1) throw DomainError("top_k: k must be >= 1");
  const json reply = impl_->call(
      {{"op", "topk"}, {"tokens", TokenIds(tokens.begin(), tokens.end())}, {"k", k}});
  const json& arr = field(reply, "cands");
  if (!arr.is_array() || static_cast<int>(arr.size()) != k) violation("'cands' must hold k entries");
  std::vector<Candidate> out;
  for (const auto& c : arr) {
    if (!c.is_object()) violation("candidate is not an object");
    Candidate cand;
    cand.token = static_cast<TokenId>(integer_field(c, "t"));
    const json& l = field(c, "l");
    if (!l.is_number()) violation("candidate logit is not a number");
    cand.logit = l.get<double>();
    if (!out.empty()) {
      const Candidate& prev = out.back();
      if (prev.logit < cand.logit || (prev.logit == cand.logit && prev.token >= cand.token)) {
        violation("candidates are not sorted by (logit desc, id asc)");
      }
    }
    out.push_back(cand);
  }
  return out;
}

std::unique_ptr<LineTransport> spawn_process_transport(const std::string& command) {
  return std::make_unique<ProcessTransport>(command);
}

std::unique_ptr<LineTransport> connect_tcp_transport(const std::string& host, std::uint16_t port) {
  return std::make_unique<TcpTransport>(host, port);
}

namespace {

template <typename T>
T parse_number(std::string_view s, const std::string& spec) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw DomainError("bad backend spec '" + spec + "'");
  }
  return v;
}

}  // namespace

std::unique_ptr<Backend> open_backend(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw DomainError("bad backend spec '" + spec + "'");
  const std::string kind = spec.substr(0, colon);
  const std::string rest = spec.substr(colon + 1);
  if (kind == "toy") {
    std::vector<std::string_view> parts;
    std::string_view view(rest);
    while (true) {
      const auto c = view.find(':');
      parts.push_back(view.substr(0, c));
      if (c == std::string_view::npos) break;
      view.remove_prefix(c + 1);
    }
    if (parts.size() != 3) throw DomainError("toy backend spec is toy:SEED:D:V");
    return std::make_unique<ToyBackend>(parse_number<std::uint64_t>(parts[0], spec),
                                        parse_number<Index>(parts[1], spec),
                                        parse_number<Index>(parts[2], spec));
  }
  if (kind == "exec") {
    if (rest.empty()) throw DomainError("exec backend needs a command");
    return std::make_unique<RemoteBackend>(spawn_process_transport(rest));
  }
  if (kind == "tcp") {
    const auto c = rest.rfind(':');
    if (c == std::string::npos) throw DomainError("tcp backend spec is tcp:HOST:PORT");
    return std::make_unique<RemoteBackend>(
        connect_tcp_transport(rest.substr(0, c), parse_number<std::uint16_t>(rest.substr(c + 1), spec)));
  }
  throw DomainError("unknown backend kind '" + kind + "'");
}

}  // namespace frh
