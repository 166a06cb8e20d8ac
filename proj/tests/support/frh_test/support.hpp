#pragma once

#include "frh/frame.hpp"
#include "frh/random.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

namespace frh_test {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = std::filesystem::temp_directory_path() /
            ("frh-" + tag + "-" + std::to_string(stamp) + "-" + std::to_string(counter()++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  static int& counter() {
    static int n = 0;
    return n;
  }
  std::filesystem::path path_;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

inline frh::Matrix mat(std::initializer_list<std::initializer_list<double>> columns) {
  const auto k = static_cast<frh::Index>(columns.size());
  const auto d = k == 0 ? 0 : static_cast<frh::Index>(columns.begin()->size());
  frh::Matrix m(d, k);
  frh::Index j = 0;
  for (const auto& col : columns) {
    frh::Index i = 0;
    for (double v : col) m(i++, j) = v;
    ++j;
  }
  return m;
}

inline frh::Vector vec(std::initializer_list<double> values) {
  frh::Vector v(static_cast<frh::Index>(values.size()));
  frh::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

/// Random SPD metric with condition number bounded by construction.
inline frh::Metric random_metric(frh::Rng& rng, frh::Index d) {
  const frh::Matrix g = rng.gaussian_matrix(d, d);
  return frh::Metric(g * g.transpose() / static_cast<double>(d) + frh::Matrix::Identity(d, d));
}

}  // namespace frh_test
