#pragma once

// Steerable DCT: the separable 2D-DCT seen as an eigenbasis of the grid-graph
// Laplacian, with each degenerate eigenvector pair (k,l)/(l,k) rotated by its
// own angle.
//
// Index conventions used throughout the library:
//   * samples are raster (row-major) vectorized: x[r*n + c];
//   * the 2D basis vector v(k,l) = v(k) (x) v(l) lives at coefficient index k*n + l;
//   * a rotation pair is stored with k < l, i = k*n + l, j = l*n + k.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "sdct/types.hpp"

namespace sdct {

/// Orthonormal DCT-2 basis of length n, which is also the eigenbasis of the
/// path-graph Laplacian L(P_n). Column k of `vectors` is v(k).
template <typename Scalar = double>
struct DctBasis1D {
  int n = 0;
  Matrix<Scalar> vectors;
  Vector<Scalar> eigenvalues;
};

template <typename Scalar = double>
DctBasis1D<Scalar> build_dct_1d(int n) {
  if (n < 2) throw InvalidArgument("build_dct_1d: block size must be >= 2");
  const Scalar pi = std::numbers::pi_v<Scalar>;
  DctBasis1D<Scalar> basis;
  basis.n = n;
  basis.vectors.resize(n, n);
  basis.eigenvalues.resize(n);
  for (int k = 0; k < n; ++k) {
    const Scalar scale = k == 0 ? std::sqrt(Scalar(1) / n) : std::sqrt(Scalar(2) / n);
    for (int j = 0; j < n; ++j)
      basis.vectors(j, k) = scale * std::cos(pi * k * (j + Scalar(0.5)) / n);
    const Scalar s = std::sin(pi * k / (2 * Scalar(n)));
    basis.eigenvalues(k) = 4 * s * s;
  }
  return basis;
}

/// Laplacian of the path graph P_n.
inline Eigen::MatrixXi path_laplacian(int n) {
  if (n < 2) throw InvalidArgument("path_laplacian: size must be >= 2");
  Eigen::MatrixXi L = Eigen::MatrixXi::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) {
    L(i, i + 1) = L(i + 1, i) = -1;
    L(i, i) += 1;
    L(i + 1, i + 1) += 1;
  }
  return L;
}

/// Laplacian of the 4-connected n x n grid P_n x P_n, nodes in raster order.
inline Eigen::MatrixXi grid_laplacian(int n) {
  if (n < 2) throw InvalidArgument("grid_laplacian: size must be >= 2");
  const int N = n * n;
  Eigen::MatrixXi L = Eigen::MatrixXi::Zero(N, N);
  auto link = [&](int a, int b) {
    L(a, b) = L(b, a) = -1;
    L(a, a) += 1;
    L(b, b) += 1;
  };
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      if (c + 1 < n) link(r * n + c, r * n + c + 1);
      if (r + 1 < n) link(r * n + c, (r + 1) * n + c);
    }
  }
  return L;
}

/// One rotatable pair of 2D-DCT basis vectors, k < l.
struct RotationPair {
  int k = 0;
  int l = 0;
  int zigzag_position = 0;
  int i = 0;  ///< coefficient index k*n + l
  int j = 0;  ///< coefficient index l*n + k
};

/// Classic zigzag scan of an n x n grid as (row, col) positions.
inline std::vector<std::pair<int, int>> zigzag_scan(int n) {
  std::vector<std::pair<int, int>> order;
  order.reserve(static_cast<std::size_t>(n) * n);
  for (int d = 0; d <= 2 * (n - 1); ++d) {
    const int lo = std::max(0, d - (n - 1));
    const int hi = std::min(d, n - 1);
    if (d % 2 == 0) {
      for (int r = hi; r >= lo; --r) order.emplace_back(r, d - r);
    } else {
      for (int r = lo; r <= hi; ++r) order.emplace_back(r, d - r);
    }
  }
  return order;
}

/// The p = n(n-1)/2 rotation pairs in angle-vector (zigzag) order: the
/// classic zigzag restricted to the strict upper triangle, so each unordered
/// pair appears once and the diagonal is skipped.
inline std::vector<RotationPair> rotation_pairs(int n) {
  if (n < 2) throw InvalidArgument("rotation_pairs: block size must be >= 2");
  std::vector<RotationPair> pairs;
  pairs.reserve(num_pairs(n));
  for (auto [r, c] : zigzag_scan(n)) {
    if (r >= c) continue;
    RotationPair p;
    p.k = r;
    p.l = c;
    p.zigzag_position = static_cast<int>(pairs.size());
    p.i = r * n + c;
    p.j = c * n + r;
    pairs.push_back(p);
  }
  return pairs;
}

/// A distinct eigenvalue of L(P_n x P_n) with the (k,l) labels sharing it.
struct EigenvalueClass {
  double value = 0.0;
  std::vector<std::pair<int, int>> members;
  int multiplicity() const { return static_cast<int>(members.size()); }
};

/// A rotatable pair annotated with its eigenvalue and the multiplicity of
/// that eigenvalue in the grid spectrum.
struct EigenPairIndex {
  int k = 0;
  int l = 0;
  int zigzag_position = 0;
  double eigenvalue = 0.0;
  int multiplicity = 0;
};

struct EigenTable {
  int n = 0;
  std::vector<EigenPairIndex> pairs;      ///< zigzag order, length p
  std::vector<EigenvalueClass> spectrum;  ///< ascending distinct eigenvalues

  /// Eigenvalue lambda_k + lambda_l of basis vector v(k,l).
  double eigenvalue(int k, int l) const { return lambda_kl[static_cast<std::size_t>(k * n + l)]; }

  std::vector<double> lambda_kl;
};

inline EigenTable eigen_pair_table(int n) {
  const auto basis = build_dct_1d<double>(n);
  EigenTable table;
  table.n = n;
  table.lambda_kl.resize(static_cast<std::size_t>(n) * n);
  std::vector<std::pair<double, std::pair<int, int>>> all;
  for (int k = 0; k < n; ++k) {
    for (int l = 0; l < n; ++l) {
      const double v = basis.eigenvalues(k) + basis.eigenvalues(l);
      table.lambda_kl[static_cast<std::size_t>(k * n + l)] = v;
      all.push_back({v, {k, l}});
    }
  }
  std::sort(all.begin(), all.end());
  constexpr double kTol = 1e-9;
  for (const auto& [v, kl] : all) {
    if (table.spectrum.empty() || v - table.spectrum.back().value > kTol) {
      table.spectrum.push_back({v, {}});
    }
    table.spectrum.back().members.push_back(kl);
  }
  auto multiplicity_of = [&](double v) {
    for (const auto& cls : table.spectrum)
      if (std::abs(cls.value - v) <= kTol) return cls.multiplicity();
    return 0;
  };
  for (const auto& rp : rotation_pairs(n)) {
    const double v = table.eigenvalue(rp.k, rp.l);
    table.pairs.push_back({rp.k, rp.l, rp.zigzag_position, v, multiplicity_of(v)});
  }
  return table;
}

/// The p quantized rotation angles of one block, in zigzag order. Angle j is
/// index(j) * pi / q_theta, so every angle lies on the grid Q_theta in [0, pi).
class AngleVector {
 public:
  AngleVector() = default;
  AngleVector(int n, int q_theta, int fill_index = 0) : n_(n), q_theta_(q_theta) {
    if (n < 2) throw InvalidArgument("AngleVector: block size must be >= 2");
    if (q_theta < 2) throw InvalidArgument("AngleVector: q_theta must be >= 2");
    check_index(fill_index);
    index_.assign(static_cast<std::size_t>(num_pairs(n)), fill_index);
  }
  AngleVector(int n, int q_theta, std::vector<int> indices) : AngleVector(n, q_theta) {
    if (static_cast<int>(indices.size()) != num_pairs(n))
      throw InvalidArgument("AngleVector: expected n(n-1)/2 angles");
    for (int v : indices) check_index(v);
    index_ = std::move(indices);
  }

  int n() const { return n_; }
  int q_theta() const { return q_theta_; }
  int size() const { return static_cast<int>(index_.size()); }
  int index(int j) const { return index_[static_cast<std::size_t>(j)]; }
  void set_index(int j, int idx) {
    check_index(idx);
    index_[static_cast<std::size_t>(j)] = idx;
  }
  const std::vector<int>& indices() const { return index_; }

  double step() const { return std::numbers::pi / q_theta_; }
  double value(int j) const { return index(j) * step(); }

  template <typename Scalar = double>
  Vector<Scalar> values() const {
    Vector<Scalar> out(size());
    for (int j = 0; j < size(); ++j) out(j) = static_cast<Scalar>(value(j));
    return out;
  }

  bool is_zero() const {
    return std::all_of(index_.begin(), index_.end(), [](int v) { return v == 0; });
  }

  friend bool operator==(const AngleVector&, const AngleVector&) = default;

 private:
  void check_index(int idx) const {
    if (idx < 0 || idx >= q_theta_) throw InvalidArgument("AngleVector: angle index outside Q_theta");
  }

  int n_ = 0;
  int q_theta_ = 0;
  std::vector<int> index_;
};

/// Apply R(theta)^T to 2D-DCT coefficients in place: the SDCT fast path.
template <typename Scalar, typename Derived>
void rotate_forward(std::span<const RotationPair> pairs, const Vector<Scalar>& cosines,
                    const Vector<Scalar>& sines, Eigen::MatrixBase<Derived>& coeffs) {
  for (const auto& p : pairs) {
    const Scalar c = cosines(p.zigzag_position);
    const Scalar s = sines(p.zigzag_position);
    const Scalar a = coeffs(p.i);
    const Scalar b = coeffs(p.j);
    coeffs(p.i) = c * a - s * b;
    coeffs(p.j) = s * a + c * b;
  }
}

/// Apply R(theta) in place (inverse of rotate_forward).
template <typename Scalar, typename Derived>
void rotate_inverse(std::span<const RotationPair> pairs, const Vector<Scalar>& cosines,
                    const Vector<Scalar>& sines, Eigen::MatrixBase<Derived>& coeffs) {
  for (const auto& p : pairs) {
    const Scalar c = cosines(p.zigzag_position);
    const Scalar s = sines(p.zigzag_position);
    const Scalar a = coeffs(p.i);
    const Scalar b = coeffs(p.j);
    coeffs(p.i) = c * a + s * b;
    coeffs(p.j) = -s * a + c * b;
  }
}

/// Separable orthonormal 2D-DCT of a raster-vectorized n x n block.
template <typename Scalar>
Vector<Scalar> dct2(const DctBasis1D<Scalar>& basis, const Vector<Scalar>& samples) {
  const int n = basis.n;
  if (samples.size() != n * n) throw InvalidArgument("dct2: sample count must be n*n");
  using RowMajor = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMajor> x(samples.data(), n, n);
  RowMajor c = basis.vectors.transpose() * x * basis.vectors;
  return Eigen::Map<const Vector<Scalar>>(c.data(), n * n);
}

/// Inverse of dct2.
template <typename Scalar>
Vector<Scalar> idct2(const DctBasis1D<Scalar>& basis, const Vector<Scalar>& coeffs) {
  const int n = basis.n;
  if (coeffs.size() != n * n) throw InvalidArgument("idct2: coefficient count must be n*n");
  using RowMajor = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMajor> c(coeffs.data(), n, n);
  RowMajor x = basis.vectors * c * basis.vectors.transpose();
  return Eigen::Map<const Vector<Scalar>>(x.data(), n * n);
}

/// The steerable transform V(theta) = V * R(theta) for one block size and
/// one angle vector. Only the factored form is stored; dense() materializes
/// the n^2 x n^2 matrix for verification.
template <typename Scalar = double>
class SdctBasis {
 public:
  SdctBasis(int n, const Vector<Scalar>& theta)
      : dct_(build_dct_1d<Scalar>(n)), pairs_(rotation_pairs(n)), theta_(theta) {
    if (theta.size() != num_pairs(n))
      throw InvalidArgument("SdctBasis: angle vector length must be n(n-1)/2");
    cos_ = theta_.array().cos();
    sin_ = theta_.array().sin();
  }

  SdctBasis(const AngleVector& angles) : SdctBasis(angles.n(), angles.values<Scalar>()) {}

  int n() const { return dct_.n; }
  const DctBasis1D<Scalar>& dct() const { return dct_; }
  const std::vector<RotationPair>& pairs() const { return pairs_; }
  const Vector<Scalar>& theta() const { return theta_; }
  const Vector<Scalar>& cosines() const { return cos_; }
  const Vector<Scalar>& sines() const { return sin_; }

  /// c = V(theta)^T x, computed as R(theta)^T c_DCT.
  Vector<Scalar> forward(const Vector<Scalar>& samples) const {
    Vector<Scalar> c = dct2(dct_, samples);
    rotate_forward<Scalar>(pairs_, cos_, sin_, c);
    return c;
  }

  /// x = V(theta) c.
  Vector<Scalar> inverse(const Vector<Scalar>& coeffs) const {
    if (coeffs.size() != n() * n()) throw InvalidArgument("SdctBasis::inverse: size mismatch");
    Vector<Scalar> c = coeffs;
    rotate_inverse<Scalar>(pairs_, cos_, sin_, c);
    return idct2(dct_, c);
  }

  /// Separable 2D-DCT matrix V = V(0); column k*n + l is v(k) (x) v(l).
  Matrix<Scalar> dense_dct() const {
    const int n = this->n();
    Matrix<Scalar> V(n * n, n * n);
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l)
        for (int r = 0; r < n; ++r)
          for (int c = 0; c < n; ++c)
            V(r * n + c, k * n + l) = dct_.vectors(r, k) * dct_.vectors(c, l);
    return V;
  }

  /// Diagonal part Delta: ones at the non-rotating indices k*n + k.
  Eigen::SparseMatrix<Scalar> delta() const {
    const int n = this->n();
    std::vector<Eigen::Triplet<Scalar>> t;
    for (int k = 0; k < n; ++k) t.emplace_back(k * n + k, k * n + k, Scalar(1));
    Eigen::SparseMatrix<Scalar> D(n * n, n * n);
    D.setFromTriplets(t.begin(), t.end());
    return D;
  }

  /// Rotating part R~(theta): 2x2 Givens blocks on each (i, j) pair.
  Eigen::SparseMatrix<Scalar> rotation_part() const {
    const int n = this->n();
    std::vector<Eigen::Triplet<Scalar>> t;
    for (const auto& p : pairs_) {
      const Scalar c = cos_(p.zigzag_position);
      const Scalar s = sin_(p.zigzag_position);
      t.emplace_back(p.i, p.i, c);
      t.emplace_back(p.j, p.j, c);
      t.emplace_back(p.i, p.j, s);
      t.emplace_back(p.j, p.i, -s);
    }
    Eigen::SparseMatrix<Scalar> R(n * n, n * n);
    R.setFromTriplets(t.begin(), t.end());
    return R;
  }

  /// R(theta) = Delta + R~(theta).
  Eigen::SparseMatrix<Scalar> rotation() const { return delta() + rotation_part(); }

  /// Dense V(theta) = V R(theta).
  Matrix<Scalar> dense() const { return dense_dct() * rotation(); }

 private:
  DctBasis1D<Scalar> dct_;
  std::vector<RotationPair> pairs_;
  Vector<Scalar> theta_;
  Vector<Scalar> cos_;
  Vector<Scalar> sin_;
};

template <typename Scalar = double>
SdctBasis<Scalar> build_sdct(int n, const AngleVector& angles) {
  if (angles.n() != n || angles.size() != num_pairs(n))
    throw InvalidArgument("build_sdct: angle vector does not match block size");
  return SdctBasis<Scalar>(n, angles.values<Scalar>());
}

template <typename Scalar = double>
SdctBasis<Scalar> build_sdct(int n, const Vector<Scalar>& theta) {
  return SdctBasis<Scalar>(n, theta);
}

template <typename Scalar>
Vector<Scalar> forward(const SdctBasis<Scalar>& basis, const Vector<Scalar>& samples) {
  if (samples.size() != basis.n() * basis.n()) throw InvalidArgument("forward: block size mismatch");
  return basis.forward(samples);
}

template <typename Scalar>
Vector<Scalar> inverse(const SdctBasis<Scalar>& basis, const Vector<Scalar>& coeffs) {
  return basis.inverse(coeffs);
}

/// Angle in [0, pi) that zeroes coefficient a of the pair (a, b) under
/// rotate_forward: atan2(a, b) reduced modulo pi. (0, 0) maps to 0.
template <typename Scalar>
Scalar sparsifying_angle(Scalar a, Scalar b) {
  if (a == Scalar(0) && b == Scalar(0)) return Scalar(0);
  const Scalar pi = std::numbers::pi_v<Scalar>;
  Scalar t = std::atan2(a, b);
  if (t < 0) t += pi;
  if (t >= pi) t -= pi;
  return t;
}

template <typename Scalar = double>
struct SparsifyingResult {
  Vector<Scalar> theta;   ///< continuous angles, zigzag order
  Vector<Scalar> coeffs;  ///< SDCT coefficients under theta
};

/// Per-pair rotation that moves all the energy of (c_kl, c_lk) into c_lk,
/// leaving p coefficients exactly null.
template <typename Scalar = double>
SparsifyingResult<Scalar> sparsifying_angles(int n, const Vector<Scalar>& samples) {
  const auto basis = build_dct_1d<Scalar>(n);
  const auto pairs = rotation_pairs(n);
  SparsifyingResult<Scalar> out;
  out.coeffs = dct2(basis, samples);
  out.theta.resize(num_pairs(n));
  for (const auto& p : pairs)
    out.theta(p.zigzag_position) = sparsifying_angle(out.coeffs(p.i), out.coeffs(p.j));
  const Vector<Scalar> cosines = out.theta.array().cos();
  const Vector<Scalar> sines = out.theta.array().sin();
  rotate_forward<Scalar>(pairs, cosines, sines, out.coeffs);
  return out;
}

}  // namespace sdct
