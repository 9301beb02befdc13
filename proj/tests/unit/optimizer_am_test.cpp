#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "sdct/optimizer_am.hpp"
#include "test_util.hpp"

namespace sdct {
namespace {

using test::random_angles;
using test::random_block;

RdParams params(double lambda, double alpha, double step) {
  RdParams p;
  p.lambda = lambda;
  p.alpha = alpha;
  p.coeff_step = step;
  return p;
}

VectorXd dct_of(const VectorXd& x) { return dct2(build_dct_1d<double>(block_side(x.size())), x); }

TEST(UpdateCoeffs, TinyStepNoPenaltyIsExact) {
  std::mt19937 rng(1);
  const VectorXd x = random_block(8, rng);
  const AngleVector a = random_angles(8, 8, rng);
  const VectorXd c = update_coeffs(x, a, params(0.0, 8.0, 1e-9));
  EXPECT_LE((c - SdctBasis<double>(a).forward(x)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(UpdateCoeffs, HugeLambdaZeroesEverything) {
  std::mt19937 rng(2);
  const VectorXd x = random_block(8, rng);
  EXPECT_TRUE(update_coeffs(x, random_angles(8, 8, rng), params(1e12, 8.0, 4.0)).isZero());
}

TEST(UpdateCoeffs, MatchesExhaustiveGridSearch) {
  std::mt19937 rng(3);
  for (int t = 0; t < 20; ++t) {
    const VectorXd x = random_block(4, rng, -200, 200);
    const AngleVector a = random_angles(4, 8, rng);
    const RdParams p = params(std::uniform_real_distribution<double>(0.5, 40.0)(rng), 6.0, 7.0);
    const VectorXd exact = SdctBasis<double>(a).forward(x);
    const VectorXd c = update_coeffs(x, a, p);
    for (Eigen::Index i = 0; i < exact.size(); ++i) {
      const double v = exact(i);
      auto cost = [&](double g) { return (g - v) * (g - v) + p.lambda * p.alpha * (g != 0.0); };
      double best = cost(0.0);
      const long k0 = std::lround(std::floor(v / p.coeff_step));
      for (long k = k0 - 2; k <= k0 + 3; ++k) best = std::min(best, cost(k * p.coeff_step));
      EXPECT_NEAR(cost(c(i)), best, 1e-9) << "i=" << i;
      EXPECT_NEAR(std::remainder(c(i), p.coeff_step), 0.0, 1e-9);
    }
  }
}

TEST(BestGridCoefficient, KeepsOnlyWhenWorthIt) {
  const RdParams p = params(10.0, 5.0, 8.0);  // lambda*alpha = 50
  // Q[9] = 8: (8-9)^2 + 50 = 51 < 81, keep
  EXPECT_DOUBLE_EQ(best_grid_coefficient(9.0, p), 8.0);
  // Q[6] = 8: 4 + 50 = 54 > 36, drop
  EXPECT_DOUBLE_EQ(best_grid_coefficient(6.0, p), 0.0);
  EXPECT_DOUBLE_EQ(best_grid_coefficient(-9.0, p), -8.0);
  EXPECT_DOUBLE_EQ(best_grid_coefficient(0.0, p), 0.0);
}

TEST(BuildW, ZeroCoefficients) { EXPECT_TRUE(build_W(VectorXd::Zero(16), 4).isZero()); }

TEST(BuildW, LinearInTrigVector) {
  std::mt19937 rng(4);
  for (int n : {4, 8}) {
    const AngleVector a = random_angles(n, 8, rng);
    const VectorXd c = random_block(n, rng, -50, 50);
    const SdctBasis<double> b(a);
    const VectorXd lhs = b.dense_dct() * (b.rotation_part() * c);
    VectorXd trig(2 * a.size());
    for (int j = 0; j < a.size(); ++j) {
      trig(2 * j) = std::cos(a.value(j));
      trig(2 * j + 1) = std::sin(a.value(j));
    }
    EXPECT_LE((lhs - build_W(c, n) * trig).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(BuildW, SinglePairedCoefficientTouchesTwoColumns) {
  const auto pairs = rotation_pairs(4);
  VectorXd c = VectorXd::Zero(16);
  c(pairs[2].i) = 3.0;
  const MatrixXd W = build_W(c, 4);
  int nonzero_cols = 0;
  for (Eigen::Index k = 0; k < W.cols(); ++k) nonzero_cols += !W.col(k).isZero();
  EXPECT_EQ(nonzero_cols, 2);
  EXPECT_FALSE(W.col(4).isZero());
  EXPECT_FALSE(W.col(5).isZero());
}

AmState state_for(const VectorXd& d, const AngleVector& a, const RdParams& p) {
  AmState s;
  s.angles = a;
  s.coeffs = update_coeffs(SdctBasis<double>(a).forward(idct2(build_dct_1d<double>(a.n()), d)), p);
  return s;
}

TEST(UpdateAngle, EnergyInOneCoefficientKeepsZero) {
  const int n = 4;
  const auto pairs = rotation_pairs(n);
  for (int j : {0, 3, 5}) {
    for (bool first : {true, false}) {
      VectorXd d = VectorXd::Zero(16);
      d(first ? pairs[j].i : pairs[j].j) = 64.0;
      const RdParams p = params(1.0, 8.0, 8.0);
      EXPECT_EQ(update_angle(j, d, state_for(d, AngleVector(n, 8), p), p), 0);
    }
  }
}

TEST(UpdateAngle, MatchesExhaustiveSearchThroughJ) {
  std::mt19937 rng(5);
  for (int t = 0; t < 60; ++t) {
    const VectorXd d = dct_of(random_block(4, rng, -100, 100));
    const RdParams p = params(std::uniform_real_distribution<double>(0.0, 30.0)(rng), 6.0, 6.0);
    const AngleVector a = random_angles(4, 8, rng);
    const AmState s = state_for(d, a, p);
    const int j = t % a.size();
    const int got = update_angle(j, d, s, p);
    double best = 1e300;
    for (int idx = 0; idx < 8; ++idx) {
      AngleVector b = a;
      b.set_index(j, idx);
      best = std::min(best, evaluate_J_from_dct(d, b, s.coeffs, p).J);
    }
    AngleVector chosen = a;
    chosen.set_index(j, got);
    EXPECT_LE(evaluate_J_from_dct(d, chosen, s.coeffs, p).J, best + 1e-9 * std::max(1.0, best)) << "trial " << t;
  }
}

TEST(UpdateAngle, HugeLambdaMergesWithNeighbours) {
  std::mt19937 rng(6);
  const VectorXd d = dct_of(random_block(4, rng));
  AngleVector a(4, 8, 5);
  a.set_index(2, 1);
  const RdParams p = params(1e9, 6.0, 6.0);
  AmState s;
  s.angles = a;
  s.coeffs = VectorXd::Zero(16);
  EXPECT_EQ(update_angle(2, d, s, p), 5);
}

TEST(UpdateAngle, PositionOutOfRange) {
  AmState s;
  s.angles = AngleVector(4, 8);
  s.coeffs = VectorXd::Zero(16);
  EXPECT_THROW(update_angle(6, VectorXd::Zero(16), s, params(1, 1, 1)), InvalidArgument);
}

TEST(BestDistortionAngle, MatchesGridScan) {
  std::mt19937 rng(7);
  const auto pairs = rotation_pairs(4);
  for (int t = 0; t < 100; ++t) {
    const VectorXd d = random_block(4, rng, -50, 50);
    const VectorXd c = random_block(4, rng, -50, 50);
    const int j = t % 6;
    const auto& pr = pairs[static_cast<std::size_t>(j)];
    auto dist = [&](int idx) {
      const double th = idx * std::numbers::pi / 8;
      const double ri = std::cos(th) * d(pr.i) - std::sin(th) * d(pr.j);
      const double rj = std::sin(th) * d(pr.i) + std::cos(th) * d(pr.j);
      return (ri - c(pr.i)) * (ri - c(pr.i)) + (rj - c(pr.j)) * (rj - c(pr.j));
    };
    double best = 1e300;
    for (int idx = 0; idx < 8; ++idx) best = std::min(best, dist(idx));
    EXPECT_NEAR(dist(best_distortion_angle(j, d, c, 8, 0)), best, 1e-9);
  }
}

TEST(RunAm, DctBasisVectorStaysAtZeroAngles) {
  const int n = 8;
  const SdctBasis<double> dct(AngleVector(n, 8));
  const VectorXd x = dct.inverse(VectorXd::Unit(64, 1 * n + 2) * 80.0);
  const RdParams p = params(5.0, 8.0, 10.0);
  const AmState s = run_sdct_am(x, p, AngleVector(n, 8));
  EXPECT_EQ(count_nonzeros(s.coeffs), 1);
  EXPECT_NEAR(s.result().distortion, 0.0, 1e-9);
  const auto at_zero = evaluate_J(x, AngleVector(n, 8), s.coeffs, p);
  EXPECT_NEAR(s.result().J, at_zero.J, 1e-9);
  EXPECT_FALSE(s.cap_reached);
}

TEST(RunAm, HistoryNonincreasingOnRandomBlocks) {
  std::mt19937 rng(8);
  for (int t = 0; t < 100; ++t) {
    const VectorXd x = random_block(4, rng);
    const RdParams p = params(std::uniform_real_distribution<double>(1.0, 60.0)(rng), 7.0, 9.0);
    const AmState s = run_sdct_am(x, p, random_angles(4, 8, rng));
    for (std::size_t i = 1; i < s.history.size(); ++i) EXPECT_LE(s.history[i].J, s.history[i - 1].J) << t;
    EXPECT_FALSE(s.cap_reached);
  }
}

TEST(RunAm, EveryHalfStepIsNonincreasing) {
  std::mt19937 rng(9);
  for (int t = 0; t < 10; ++t) {
    const VectorXd x = random_block(8, rng);
    const VectorXd d = dct_of(x);
    const RdParams p = params(20.0, 7.0, 12.0);
    std::vector<double> js;
    AmOptions o;
    o.observer = [&](const AngleVector& a, const VectorXd& c) { js.push_back(evaluate_J_from_dct(d, a, c, p).J); };
    run_sdct_am_from_dct(d, p, random_angles(8, 8, rng), o);
    for (std::size_t i = 1; i < js.size(); ++i) ASSERT_LE(js[i], js[i - 1] + 1e-9 * js[i - 1]) << i;
  }
}

TEST(RunAm, FewSweepsOnNaturalBlocks) {
  std::vector<int> sweeps;
  for (const auto& x : test::natural_blocks(8, 40)) {
    RdParams p = params(0.85 * 0.072 * 256, 1.0, 16.0);
    p.alpha = estimate_alpha(x, p);
    sweeps.push_back(run_sdct_am(x, p, AngleVector(8, 8)).iterations);
  }
  std::nth_element(sweeps.begin(), sweeps.begin() + sweeps.size() / 2, sweeps.end());
  EXPECT_LT(sweeps[sweeps.size() / 2], 10);
}

TEST(RunAm, BestOverInitsNotWorseThanZeroInit) {
  std::mt19937 rng(10);
  for (const auto& x : test::natural_blocks(8, 8)) {
    RdParams p = params(18.0, 1.0, 16.0);
    p.alpha = estimate_alpha(x, p);
    const VectorXd d = dct_of(x);
    const AmState best = run_sdct_am_best(d, p);
    EXPECT_LE(best.result().J, run_sdct_am_from_dct(d, p, AngleVector(8, 8)).result().J);
    EXPECT_GE(best.init_index, 0);
    EXPECT_LT(best.init_index, 8);
  }
}

TEST(RunAm, Mismatches) {
  const RdParams p = params(1, 1, 1);
  EXPECT_THROW(run_sdct_am(VectorXd::Zero(64), p, AngleVector(4, 8)), InvalidArgument);
  EXPECT_THROW(run_sdct_am(VectorXd::Zero(16), p, AngleVector(4, 4)), InvalidArgument);
}

}  // namespace
}  // namespace sdct
