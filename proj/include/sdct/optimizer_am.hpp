#pragma once

// Alternated minimization of J over the coefficients and each angle
// (SDCT-AM). All work happens in the coefficient domain: with d = V^T x the
// block's 2D-DCT coefficients, D(c, theta) = ||R(theta)^T d - c||^2.

#include <functional>
#include <vector>

#include "sdct/rd_model.hpp"
#include "sdct/transform.hpp"

namespace sdct {

struct AmState {
  AngleVector angles;
  VectorXd coeffs;                   ///< values on the coefficient grid
  std::vector<RdBreakdown> history;  ///< J before the first sweep, then after each sweep
  int iterations = 0;                ///< completed sweeps
  bool cap_reached = false;
  int init_index = 0;                ///< constant initial angle index

  const RdBreakdown& result() const { return history.back(); }
};

struct AmOptions {
  int max_sweeps = 50;
  /// Called after the coefficient update and after every angle update.
  std::function<void(const AngleVector&, const VectorXd&)> observer;
};

/// Minimizer of (c - x)^2 + lambda*alpha*[c != 0] over the coefficient grid.
double best_grid_coefficient(double exact, const RdParams& params);

/// Coefficient step of the alternation: componentwise best grid value of the
/// exact SDCT coefficients.
VectorXd update_coeffs(const VectorXd& exact_coeffs, const RdParams& params);
VectorXd update_coeffs(const VectorXd& samples, const AngleVector& angles, const RdParams& params);

/// W(c) with V * R~(theta) * c = W(c) * (cos t1, sin t1, ..., cos tp, sin tp)^T.
MatrixXd build_W(const VectorXd& coeffs, int n);

/// Distortion-optimal grid angle for pair position j with coefficients held
/// fixed: closed-form stationary point, compared with the interval ends, then
/// projected onto Q_theta. Returns `current` when the pair carries no signal.
int best_distortion_angle(int j, const VectorXd& dct_coeffs, const VectorXd& coeffs, int q_theta,
                          int current);

/// Angle step for position j: chooses among the distortion-optimal angle and
/// the neighbouring angles by full J, preferring the neighbours on ties.
int update_angle(int j, const VectorXd& dct_coeffs, const AmState& state, const RdParams& params);

AmState run_sdct_am(const VectorXd& samples, const RdParams& params, const AngleVector& init,
                    const AmOptions& options = {});
AmState run_sdct_am_from_dct(const VectorXd& dct_coeffs, const RdParams& params, const AngleVector& init,
                             const AmOptions& options = {});

/// Runs SDCT-AM from every constant angle in Q_theta and keeps the lowest J
/// (earliest initialization on ties, so theta = 0 wins a tie).
AmState run_sdct_am_best(const VectorXd& dct_coeffs, const RdParams& params, const AmOptions& options = {});

}  // namespace sdct
