#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace sdct {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;
using VectorXi = Vector<int>;

/// Raised when a size, parameter or configuration violates a precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Number of rotatable eigenvector pairs for an n x n block: n(n-1)/2.
constexpr int num_pairs(int n) { return n * (n - 1) / 2; }

/// ceil(log2(x)) for x >= 1.
constexpr int ceil_log2(int x) {
  int bits = 0;
  while ((1 << bits) < x) ++bits;
  return bits;
}

/// floor(log2(x)) for x >= 1.
constexpr int floor_log2(int x) {
  int bits = -1;
  while (x > 0) {
    x >>= 1;
    ++bits;
  }
  return bits;
}

/// Side length of a square block with `count` samples; throws if not square.
inline int block_side(std::size_t count) {
  const int n = static_cast<int>(std::lround(std::sqrt(static_cast<double>(count))));
  if (n < 1 || static_cast<std::size_t>(n) * static_cast<std::size_t>(n) != count)
    throw InvalidArgument("block must hold n*n samples");
  return n;
}

}  // namespace sdct
