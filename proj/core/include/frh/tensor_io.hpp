#pragma once

#include "frh/frame.hpp"

#include <filesystem>
#include <iosfwd>

namespace frh {

/**
 * Tensor file layout (all little-endian):
 *
 *   8 bytes   "FRHTNSR1"
 *   u32       rows R
 *   u32       cols C
 *   R*C f32   row-major values
 *
 * Values are stored as IEEE-754 binary32; writing a double matrix truncates.
 */
inline constexpr char kTensorMagic[8] = {'F', 'R', 'H', 'T', 'N', 'S', 'R', '1'};

Matrix read_tensor(std::istream& in);
void write_tensor(std::ostream& out, const Matrix& m);

Matrix read_tensor_file(const std::filesystem::path& path);
void write_tensor_file(const std::filesystem::path& path, const Matrix& m);

/// Rounds every entry to the nearest binary32 value (the precision tensor files carry).
Matrix to_float_precision(const Matrix& m);

}  // namespace frh
