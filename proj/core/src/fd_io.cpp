#include "fd_io.hpp"

#include <cerrno>
#include <csignal>
#include <mutex>

#include <sys/socket.h>
#include <unistd.h>

namespace frh::detail {

bool FdLineReader::read_line(std::string& line) {
  while (true) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return true;
    }
    char chunk[4096];
    const ssize_t n = ::read(fd_, chunk, sizeof chunk);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      if (buffer_.empty()) return false;
      line.swap(buffer_);
      buffer_.clear();
      return true;
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

bool write_all(int fd, const std::string& data, bool is_socket) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = is_socket ? ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL)
                                : ::write(fd, data.data() + off, data.size() - off);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    off += static_cast<std::size_t>(n);
  }
  return true;
}

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { std::signal(SIGPIPE, SIG_IGN); });
}

}  // namespace frh::detail
