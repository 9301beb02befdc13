#pragma once

// Integer approximation of the SDCT: an HEVC-style scaled integer 2D-DCT
// followed by fixed-point Givens rotations of the degenerate pairs.

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>

#include <Eigen/Core>

#include "sdct/transform.hpp"

namespace sdct {

using VectorXl = Vector<std::int64_t>;
using MatrixXl = Matrix<std::int64_t>;

/// Fractional bits carried by integer coefficients: value ~ orthonormal * 2^4.
inline constexpr int kIntegerCoeffFracBits = 4;
/// Fixed-point precision of the rotation cosines and sines.
inline constexpr int kRotationFracBits = 14;

/// Scaled integer DCT matrix; row k approximates 64*sqrt(n) * v(k).
struct IntegerDctTable {
  int n = 0;
  MatrixXl rows;
};

/// The set of integer tables read from a data file. Text format:
///
///     # comment lines start with '#'
///     sdct-intdct 1
///     table <n>
///     <n rows of n integers>
///     table <m>
///     ...
class IntegerDctTables {
 public:
  static IntegerDctTables load(const std::filesystem::path& path);
  static IntegerDctTables parse(const std::string& text);

  /// Tables shipped in the repository's data/ directory (or $SDCT_DATA_DIR).
  static const IntegerDctTables& standard();
  static std::filesystem::path standard_path();

  bool contains(int n) const { return tables_.count(n) != 0; }
  /// Throws InvalidArgument for a block size without a table.
  const IntegerDctTable& at(int n) const;

  void insert(IntegerDctTable table);

 private:
  std::map<int, IntegerDctTable> tables_;
};

/// Fixed-point cosines and sines of an angle vector.
struct FixedRotation {
  std::vector<std::int64_t> cosines;
  std::vector<std::int64_t> sines;
};

FixedRotation fixed_rotation(const AngleVector& angles);

/// Integer separable 2D-DCT; output carries kIntegerCoeffFracBits.
VectorXl integer_dct2(const IntegerDctTable& table, std::span<const std::int32_t> samples);
/// Integer inverse 2D-DCT of coefficients with kIntegerCoeffFracBits; rounds to samples.
VectorXl integer_idct2(const IntegerDctTable& table, const VectorXl& coeffs);

/// Integer SDCT: integer 2D-DCT, then R(theta)^T in fixed point.
VectorXl forward_integer(const AngleVector& angles, std::span<const std::int32_t> samples,
                         const IntegerDctTable& table);
/// Inverse of forward_integer up to the integer approximation error.
VectorXl inverse_integer(const AngleVector& angles, const VectorXl& coeffs,
                         const IntegerDctTable& table);

}  // namespace sdct
