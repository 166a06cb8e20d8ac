#include "frh/tensor_io.hpp"

#include "frh/errors.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <vector>

namespace frh {
namespace {

void put_u32(std::vector<unsigned char>& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void read_exact(std::istream& in, unsigned char* dst, std::size_t n, const char* what) {
  in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw FormatError(std::string("truncated tensor: ") + what);
  }
}

}  // namespace

Matrix read_tensor(std::istream& in) {
  std::array<unsigned char, 16> header{};
  read_exact(in, header.data(), header.size(), "header");
  if (std::memcmp(header.data(), kTensorMagic, 8) != 0) throw FormatError("bad magic");
  const std::uint32_t rows = get_u32(header.data() + 8);
  const std::uint32_t cols = get_u32(header.data() + 12);

  const std::size_t count = static_cast<std::size_t>(rows) * cols;
  std::vector<unsigned char> payload(count * 4);
  read_exact(in, payload.data(), payload.size(), "payload");

  Matrix m(rows, cols);
  const unsigned char* p = payload.data();
  for (std::uint32_t i = 0; i < rows; ++i) {
    for (std::uint32_t j = 0; j < cols; ++j, p += 4) {
      m(i, j) = static_cast<double>(std::bit_cast<float>(get_u32(p)));
    }
  }
  return m;
}

void write_tensor(std::ostream& out, const Matrix& m) {
  if (m.rows() > 0xffffffffLL || m.cols() > 0xffffffffLL) {
    throw DimensionError("tensor too large for u32 header");
  }
  std::vector<unsigned char> buf(kTensorMagic, kTensorMagic + 8);
  buf.reserve(16 + static_cast<std::size_t>(m.size()) * 4);
  put_u32(buf, static_cast<std::uint32_t>(m.rows()));
  put_u32(buf, static_cast<std::uint32_t>(m.cols()));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      put_u32(buf, std::bit_cast<std::uint32_t>(static_cast<float>(m(i, j))));
    }
  }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error("tensor write failed");
}

Matrix read_tensor_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open tensor file " + path.string());
  return read_tensor(in);
}

void write_tensor_file(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot create tensor file " + path.string());
  write_tensor(out, m);
}

Matrix to_float_precision(const Matrix& m) {
  return m.unaryExpr([](double v) { return static_cast<double>(static_cast<float>(v)); });
}

}  // namespace frh
