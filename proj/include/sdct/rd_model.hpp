#pragma once

// Rate-distortion functional J(c, theta) = D + lambda * (R_c + R_theta) and
// the quantizers shared by both angle optimizers.

#include <span>
#include <vector>

#include "sdct/transform.hpp"

namespace sdct {

/// Which subband-structure cost R_theta charges.
enum class AngleRateMode {
  Indexed,  ///< s * (ceil(log2 q) + ceil(log2 p)): angle + end index per subband
  Tree,     ///< s * ceil(log2 q) + (2s - 1): angle per leaf + binary tree labels
};

struct RdParams {
  double lambda = 0.0;
  double alpha = 8.0;
  int q_theta = 8;
  double coeff_step = 1.0;
  AngleRateMode angle_mode = AngleRateMode::Indexed;

  /// Throws InvalidArgument unless lambda >= 0, alpha > 0, q_theta >= 2, step > 0.
  void validate() const;
};

struct RdBreakdown {
  double distortion = 0.0;
  double rate_coeffs = 0.0;
  double rate_angles = 0.0;
  double J = 0.0;
  int num_subbands = 0;
  int nonzeros = 0;
};

/// Alpha used when a block has no nonzero DCT coefficient.
inline constexpr double kDefaultAlpha = 8.0;

/// ||x - V(theta) c||^2 computed in the pixel domain.
double distortion(const VectorXd& samples, const SdctBasis<double>& basis, const VectorXd& coeffs);

int count_nonzeros(const VectorXd& coeffs);

/// alpha * ||c||_0.
double rate_coeffs_model(const VectorXd& coeffs, const RdParams& params);

/// Subband count: the first subband is always transmitted, plus one per
/// position whose angle differs from its predecessor.
int count_subbands(std::span<const int> angle_indices);
inline int count_subbands(const AngleVector& angles) { return count_subbands(angles.indices()); }

/// Side-information bits for a given number of subbands.
double rate_angles_for_subbands(int subbands, int p, const RdParams& params);
double rate_angles(const AngleVector& angles, const RdParams& params);

/// x if |x| > threshold, otherwise 0.
VectorXd hard_threshold(const VectorXd& values, double threshold);
double hard_threshold(double value, double threshold);

/// Nearest multiple of `step`, ties rounded toward zero.
int quantize_index(double value, double step);
VectorXd quantize_coeffs(const VectorXd& values, const RdParams& params);
std::vector<int> quantize_indices(const VectorXd& values, double step);

/// Nearest point of Q_theta = {i*pi/q : i < q}; the value is first reduced
/// modulo pi, ties go to the smaller angle.
int quantize_angle_index(double value, int q_theta);
double quantize_angle(double value, const RdParams& params);

/// J for an arbitrary block, angle vector and coefficient vector.
RdBreakdown evaluate_J(const VectorXd& samples, const AngleVector& angles, const VectorXd& coeffs,
                       const RdParams& params);

/// Same functional evaluated in the coefficient domain from the block's DCT
/// coefficients: D = ||R(theta)^T c_DCT - c||^2 (Parseval).
RdBreakdown evaluate_J_from_dct(const VectorXd& dct_coeffs, const AngleVector& angles,
                                const VectorXd& coeffs, const RdParams& params);

/// Assemble a breakdown from its parts, recomputing J.
RdBreakdown make_breakdown(double distortion, double rate_coeffs, double rate_angles, int subbands,
                           int nonzeros, double lambda);

/// Per-block alpha: 2 * (actual bits of the quantized DCT coefficients) /
/// (their nonzero count); `fallback` when every coefficient quantizes to 0.
double estimate_alpha(const VectorXd& samples, const RdParams& params, double fallback = kDefaultAlpha);
double estimate_alpha_from_dct(const VectorXd& dct_coeffs, double coeff_step,
                               double fallback = kDefaultAlpha);

}  // namespace sdct
