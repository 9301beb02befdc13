#include "sdct/optimizer_am.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace sdct {
namespace {

struct PairGeometry {
  double cos = 1.0;
  double sin = 0.0;
};

PairGeometry angle_geometry(int idx, int q_theta) {
  const double t = idx * std::numbers::pi / q_theta;
  return {std::cos(t), std::sin(t)};
}

// Pair contribution to ||d - R(theta) c||^2.
double pair_distortion(double di, double dj, double ci, double cj, PairGeometry g) {
  const double ri = g.cos * ci + g.sin * cj;
  const double rj = -g.sin * ci + g.cos * cj;
  return (di - ri) * (di - ri) + (dj - rj) * (dj - rj);
}

VectorXd exact_coeffs(const VectorXd& dct_coeffs, const AngleVector& angles) {
  const SdctBasis<double> basis(angles);
  VectorXd e = dct_coeffs;
  rotate_forward<double>(basis.pairs(), basis.cosines(), basis.sines(), e);
  return e;
}

double bits_per_subband(const RdParams& params, int p) {
  return rate_angles_for_subbands(2, p, params) - rate_angles_for_subbands(1, p, params);
}

}  // namespace

double best_grid_coefficient(double exact, const RdParams& params) {
  // stays in double so tiny steps do not overflow an int index
  const double mag = std::ceil(std::abs(exact) / params.coeff_step - 0.5) * params.coeff_step;
  const double q = exact < 0 ? -mag : mag;
  if (q == 0.0) return 0.0;
  const double keep = (q - exact) * (q - exact) + params.lambda * params.alpha;
  const double drop = exact * exact;
  return keep < drop ? q : 0.0;
}

VectorXd update_coeffs(const VectorXd& exact, const RdParams& params) {
  params.validate();
  return exact.unaryExpr([&](double x) { return best_grid_coefficient(x, params); });
}

VectorXd update_coeffs(const VectorXd& samples, const AngleVector& angles, const RdParams& params) {
  const auto basis = build_sdct<double>(angles.n(), angles);
  return update_coeffs(forward(basis, samples), params);
}

MatrixXd build_W(const VectorXd& coeffs, int n) {
  if (coeffs.size() != n * n) throw InvalidArgument("build_W: coefficient vector must have n*n entries");
  const SdctBasis<double> basis(n, VectorXd::Zero(num_pairs(n)));
  const MatrixXd V = basis.dense_dct();
  MatrixXd W = MatrixXd::Zero(n * n, 2 * num_pairs(n));
  for (const auto& p : basis.pairs()) {
    const int col = 2 * p.zigzag_position;
    W.col(col) = V.col(p.i) * coeffs(p.i) + V.col(p.j) * coeffs(p.j);
    W.col(col + 1) = V.col(p.i) * coeffs(p.j) - V.col(p.j) * coeffs(p.i);
  }
  return W;
}

namespace {

int best_distortion_angle_for_pair(const RotationPair& p, const VectorXd& d, const VectorXd& c, int q_theta,
                                   int current) {
  // D(theta) = const - 2 (a cos theta + b sin theta), with a = x^T W^(2j), b = x^T W^(2j+1).
  const double a = d(p.i) * c(p.i) + d(p.j) * c(p.j);
  const double b = d(p.i) * c(p.j) - d(p.j) * c(p.i);
  if (a == 0.0 && b == 0.0) return current;

  const double pi = std::numbers::pi;
  auto cost = [&](double t) { return -(a * std::cos(t) + b * std::sin(t)); };
  double stationary = std::atan2(b, a);
  if (stationary < 0) stationary += pi;
  if (stationary >= pi) stationary -= pi;
  double best_continuous = stationary;
  for (double t : {0.0, pi})
    if (cost(t) < cost(best_continuous)) best_continuous = t;

  // Projection onto Q_theta. The cost is unimodal or has its extremes at the
  // ends of [0, pi], so the grid optimum is one of the grid points bracketing
  // the continuous optimum or one of the two extreme grid points.
  const double step = pi / q_theta;
  const int lower = std::min(static_cast<int>(std::floor(best_continuous / step)), q_theta - 1);
  const std::array<int, 4> candidates{lower, lower + 1, 0, q_theta - 1};
  int best = -1;
  double best_cost = 0.0;
  for (int idx : candidates) {
    if (idx < 0 || idx >= q_theta) continue;
    const double v = cost(idx * step);
    if (best < 0 || v < best_cost || (v == best_cost && idx < best)) {
      best = idx;
      best_cost = v;
    }
  }
  return best;
}

int update_angle_for_pair(int j, const RotationPair& pr, const VectorXd& d, const AngleVector& angles,
                          const VectorXd& c, const RdParams& params) {
  const int p = angles.size();
  const int q = angles.q_theta();
  const int current = angles.index(j);
  const int hat = best_distortion_angle_for_pair(pr, d, c, q, current);
  const double per_subband = bits_per_subband(params, p);

  auto local_cost = [&](int idx) {
    int changes = 0;
    if (j > 0 && idx != angles.index(j - 1)) ++changes;
    if (j + 1 < p && idx != angles.index(j + 1)) ++changes;
    return pair_distortion(d(pr.i), d(pr.j), c(pr.i), c(pr.j), angle_geometry(idx, q)) +
           params.lambda * per_subband * changes;
  };

  // Preference order on equal J: merge with a neighbour, keep, then move.
  std::vector<int> order;
  if (j > 0) {
    order.push_back(angles.index(j - 1));
  } else {
    order.push_back(0);
  }
  if (j + 1 < p) order.push_back(angles.index(j + 1));
  order.push_back(current);
  order.push_back(hat);

  int best = order.front();
  double best_cost = local_cost(best);
  for (std::size_t k = 1; k < order.size(); ++k) {
    const double v = local_cost(order[k]);
    if (v < best_cost) {
      best = order[k];
      best_cost = v;
    }
  }
  return best;
}

}  // namespace

int best_distortion_angle(int j, const VectorXd& d, const VectorXd& c, int q_theta, int current) {
  const int n = block_side(static_cast<std::size_t>(d.size()));
  if (c.size() != d.size()) throw InvalidArgument("best_distortion_angle: size mismatch");
  const auto pairs = rotation_pairs(n);
  if (j < 0 || j >= static_cast<int>(pairs.size())) throw InvalidArgument("best_distortion_angle: position out of range");
  return best_distortion_angle_for_pair(pairs[static_cast<std::size_t>(j)], d, c, q_theta, current);
}

int update_angle(int j, const VectorXd& d, const AmState& state, const RdParams& params) {
  const int p = state.angles.size();
  if (j < 0 || j >= p) throw InvalidArgument("update_angle: position out of range");
  const auto pairs = rotation_pairs(state.angles.n());
  return update_angle_for_pair(j, pairs[static_cast<std::size_t>(j)], d, state.angles, state.coeffs, params);
}

AmState run_sdct_am_from_dct(const VectorXd& d, const RdParams& params, const AngleVector& init,
                             const AmOptions& options) {
  params.validate();
  const int n = init.n();
  if (d.size() != n * n) throw InvalidArgument("run_sdct_am: block size does not match angle vector");
  if (init.q_theta() != params.q_theta) throw InvalidArgument("run_sdct_am: q_theta mismatch");

  AmState state;
  state.angles = init;
  state.coeffs = update_coeffs(exact_coeffs(d, state.angles), params);
  state.init_index = init.index(0);
  state.history.push_back(evaluate_J_from_dct(d, state.angles, state.coeffs, params));
  if (options.observer) options.observer(state.angles, state.coeffs);

  const auto pairs = rotation_pairs(n);
  for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
    state.coeffs = update_coeffs(exact_coeffs(d, state.angles), params);
    if (options.observer) options.observer(state.angles, state.coeffs);
    for (int j = state.angles.size() - 1; j >= 0; --j) {
      state.angles.set_index(
          j, update_angle_for_pair(j, pairs[static_cast<std::size_t>(j)], d, state.angles, state.coeffs, params));
      if (options.observer) options.observer(state.angles, state.coeffs);
    }
    state.iterations = sweep + 1;
    const RdBreakdown now = evaluate_J_from_dct(d, state.angles, state.coeffs, params);
    const bool stalled = !(now.J < state.history.back().J);
    state.history.push_back(now);
    if (stalled) return state;
  }
  state.cap_reached = true;
  return state;
}

AmState run_sdct_am(const VectorXd& samples, const RdParams& params, const AngleVector& init,
                    const AmOptions& options) {
  const int n = init.n();
  if (samples.size() != n * n) throw InvalidArgument("run_sdct_am: block size does not match angle vector");
  return run_sdct_am_from_dct(dct2(build_dct_1d<double>(n), samples), params, init, options);
}

AmState run_sdct_am_best(const VectorXd& d, const RdParams& params, const AmOptions& options) {
  const int n = block_side(static_cast<std::size_t>(d.size()));
  AmState best;
  for (int idx = 0; idx < params.q_theta; ++idx) {
    AmState s = run_sdct_am_from_dct(d, params, AngleVector(n, params.q_theta, idx), options);
    s.init_index = idx;
    if (best.history.empty() || s.result().J < best.result().J) best = std::move(s);
  }
  return best;
}

}  // namespace sdct
