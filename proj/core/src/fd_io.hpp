#pragma once

#include <string>

namespace frh::detail {

/// Buffered newline reader over a POSIX file descriptor.
class FdLineReader {
 public:
  explicit FdLineReader(int fd) : fd_(fd) {}
  /// False on end of stream or read error with no pending data.
  bool read_line(std::string& line);

 private:
  int fd_;
  std::string buffer_;
};

/// Writes all bytes; false on error. Never raises SIGPIPE.
bool write_all(int fd, const std::string& data, bool is_socket);

/// Ignores SIGPIPE process-wide (once).
void ignore_sigpipe();

}  // namespace frh::detail
