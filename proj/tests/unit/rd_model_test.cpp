#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "sdct/entropy.hpp"
#include "sdct/rd_model.hpp"
#include "test_util.hpp"

namespace sdct {
namespace {

using test::random_angles;
using test::random_block;

RdParams params(double lambda, double alpha, double step = 1.0) {
  RdParams p;
  p.lambda = lambda;
  p.alpha = alpha;
  p.coeff_step = step;
  return p;
}

TEST(Distortion, ExactCoefficientsGiveZero) {
  std::mt19937 rng(1);
  const VectorXd x = random_block(8, rng);
  const SdctBasis<double> b(random_angles(8, 8, rng));
  EXPECT_LE(distortion(x, b, b.forward(x)), 1e-18 * x.squaredNorm());
}

TEST(Distortion, ZeroCoefficientsGiveEnergy) {
  std::mt19937 rng(2);
  const VectorXd x = random_block(8, rng);
  const SdctBasis<double> b(random_angles(8, 8, rng));
  EXPECT_NEAR(distortion(x, b, VectorXd::Zero(64)), x.squaredNorm(), 1e-9 * x.squaredNorm());
}

TEST(Distortion, ParsevalForQuantizedCoefficients) {
  std::mt19937 rng(3);
  const VectorXd x = random_block(8, rng);
  const SdctBasis<double> b(random_angles(8, 8, rng));
  const VectorXd exact = b.forward(x);
  const VectorXd q = quantize_coeffs(exact, params(0, 1, 10.0));
  EXPECT_NEAR(distortion(x, b, q), (exact - q).squaredNorm(), 1e-9);
}

TEST(Distortion, SizeMismatch) {
  const SdctBasis<double> b(AngleVector(8, 8));
  EXPECT_THROW(distortion(VectorXd::Zero(64), b, VectorXd::Zero(16)), InvalidArgument);
}

TEST(RateCoeffs, ZeroVector) { EXPECT_EQ(rate_coeffs_model(VectorXd::Zero(64), params(1, 8)), 0.0); }

TEST(RateCoeffs, TenNonzeros) {
  VectorXd c = VectorXd::Zero(64);
  for (int i = 0; i < 10; ++i) c(3 * i) = i + 1.0;
  EXPECT_DOUBLE_EQ(rate_coeffs_model(c, params(1, 6.5)), 65.0);
  EXPECT_DOUBLE_EQ(rate_coeffs_model(c, params(1, 13.0)), 130.0);
}

TEST(RateAngles, ConstantIndexedAndTree) {
  RdParams p = params(1, 8);
  const AngleVector a(8, 8, 3);
  EXPECT_EQ(count_subbands(a), 1);
  EXPECT_DOUBLE_EQ(rate_angles(a, p), 8.0);
  p.angle_mode = AngleRateMode::Tree;
  EXPECT_DOUBLE_EQ(rate_angles(a, p), 4.0);
}

// theta == 0 is one subband like any other constant vector; the zero
// vector is only free when the block falls back to the DCT mode.
TEST(RateAngles, ZeroVectorIsOneSubband) {
  EXPECT_EQ(count_subbands(AngleVector(8, 8)), 1);
  EXPECT_DOUBLE_EQ(rate_angles(AngleVector(8, 8), params(1, 8)), 8.0);
}

TEST(RateAngles, SubbandCountsChanges) {
  const std::vector<int> idx{0, 0, 3, 3, 3, 1, 0, 0, 0, 0};
  EXPECT_EQ(count_subbands(idx), 4);
  EXPECT_EQ(count_subbands(std::vector<int>{}), 0);
  RdParams p = params(1, 8);
  EXPECT_DOUBLE_EQ(rate_angles_for_subbands(4, 28, p), 4 * 8.0);
  EXPECT_DOUBLE_EQ(rate_angles_for_subbands(4, 496, p), 4 * 12.0);
  p.angle_mode = AngleRateMode::Tree;
  EXPECT_DOUBLE_EQ(rate_angles_for_subbands(4, 28, p), 4 * 3.0 + 7.0);
}

TEST(HardThreshold, ZeroThresholdIsIdentity) {
  std::mt19937 rng(4);
  const VectorXd v = random_block(4, rng, -5, 5);
  EXPECT_EQ(hard_threshold(v, 0.0), v);
}

TEST(HardThreshold, BoundaryIsZeroed) {
  const double t = std::sqrt(3.0 * 7.0);
  EXPECT_EQ(hard_threshold(t, t), 0.0);
  EXPECT_EQ(hard_threshold(-t, t), 0.0);
  EXPECT_EQ(hard_threshold(std::nextafter(t, 10.0), t), std::nextafter(t, 10.0));
}

TEST(HardThreshold, MixedVector) {
  VectorXd v(3);
  v << 5, 0.1, -3;
  VectorXd want(3);
  want << 5, 0, -3;
  EXPECT_EQ(hard_threshold(v, 1.0), want);
  EXPECT_THROW(hard_threshold(v, -1.0), InvalidArgument);
}

TEST(Quantize, OnGridUnchanged) {
  VectorXd v(4);
  v << -30, 0, 10, 70;
  EXPECT_EQ(quantize_coeffs(v, params(0, 1, 10.0)), v);
  EXPECT_DOUBLE_EQ(quantize_angle(3 * std::numbers::pi / 8, params(0, 1)), 3 * std::numbers::pi / 8);
}

TEST(Quantize, NearestAngle) {
  EXPECT_NEAR(quantize_angle(0.4, params(0, 1)), std::numbers::pi / 8, 1e-15);
  EXPECT_EQ(quantize_angle_index(0.4, 8), 1);
  // wraps modulo pi
  EXPECT_EQ(quantize_angle_index(std::numbers::pi - 0.01, 8), 0);
  EXPECT_EQ(quantize_angle_index(-0.4, 8), 7);
}

TEST(Quantize, UniformCoefficient) {
  EXPECT_EQ(quantize_index(14.0, 10.0), 1);
  VectorXd v(1);
  v << 14.0;
  EXPECT_DOUBLE_EQ(quantize_coeffs(v, params(0, 1, 10.0))(0), 10.0);
  // ties go toward zero
  EXPECT_EQ(quantize_index(15.0, 10.0), 1);
  EXPECT_EQ(quantize_index(-15.0, 10.0), -1);
  EXPECT_EQ(quantize_index(15.0001, 10.0), 2);
  EXPECT_EQ(quantize_index(4.9, 10.0), 0);
}

TEST(EvaluateJ, LambdaZeroIsDistortion) {
  std::mt19937 rng(5);
  const VectorXd x = random_block(8, rng);
  const AngleVector a = random_angles(8, 8, rng);
  const VectorXd c = quantize_coeffs(SdctBasis<double>(a).forward(x), params(0, 8, 12.0));
  const auto r = evaluate_J(x, a, c, params(0, 8, 12.0));
  EXPECT_DOUBLE_EQ(r.J, r.distortion);
  EXPECT_GT(r.rate_coeffs, 0.0);
}

TEST(EvaluateJ, ExactCoefficientsLambdaZero) {
  std::mt19937 rng(6);
  const VectorXd x = random_block(8, rng);
  const AngleVector a = random_angles(8, 8, rng);
  EXPECT_NEAR(evaluate_J(x, a, SdctBasis<double>(a).forward(x), params(0, 8)).J, 0.0, 1e-18 * x.squaredNorm());
}

TEST(EvaluateJ, RecomputedFromParts) {
  std::mt19937 rng(7);
  for (int t = 0; t < 10; ++t) {
    const VectorXd x = random_block(8, rng);
    const AngleVector a = random_angles(8, 8, rng);
    const RdParams p = params(13.5, 7.25, 9.0);
    const VectorXd c = quantize_coeffs(SdctBasis<double>(a).forward(x), p);
    const auto r = evaluate_J(x, a, c, p);
    // independent recomputation through the dense basis
    const MatrixXd V = SdctBasis<double>(a).dense();
    const double D = (x - V * c).squaredNorm();
    int nnz = 0;
    for (auto v : c) nnz += v != 0.0;
    int s = 1;
    for (int j = 1; j < a.size(); ++j) s += a.index(j) != a.index(j - 1);
    const double want = D + 13.5 * (7.25 * nnz + s * (3 + 5));
    EXPECT_NEAR(r.J, want, 1e-9 * want);
    EXPECT_EQ(r.nonzeros, nnz);
    EXPECT_EQ(r.num_subbands, s);
    // the coefficient-domain form agrees
    const VectorXd d = SdctBasis<double>(AngleVector(8, 8)).forward(x);
    EXPECT_NEAR(evaluate_J_from_dct(d, a, c, p).J, want, 1e-9 * want);
  }
}

TEST(RdParams, Validation) {
  EXPECT_THROW(params(-1, 8).validate(), InvalidArgument);
  EXPECT_THROW(params(1, 0).validate(), InvalidArgument);
  EXPECT_THROW(params(1, 8, 0.0).validate(), InvalidArgument);
  RdParams p = params(1, 8);
  p.q_theta = 1;
  EXPECT_THROW(p.validate(), InvalidArgument);
}

TEST(EstimateAlpha, TwiceMeasuredBitsPerNonzero) {
  std::mt19937 rng(8);
  for (const auto& x : test::natural_blocks(8, 6)) {
    const RdParams p = params(0, 1, 12.0);
    const VectorXd d = SdctBasis<double>(AngleVector(8, 8)).forward(x);
    const auto idx = quantize_indices(d, 12.0);
    int nnz = 0;
    for (int v : idx) nnz += v != 0;
    ASSERT_GT(nnz, 0);
    const double bits = static_cast<double>(measure_block_rate(idx));
    EXPECT_DOUBLE_EQ(estimate_alpha(x, p), 2.0 * bits / nnz);
  }
}

TEST(EstimateAlpha, ZeroBlockUsesFallback) {
  EXPECT_DOUBLE_EQ(estimate_alpha(VectorXd::Zero(64), params(0, 1, 8.0)), kDefaultAlpha);
  EXPECT_DOUBLE_EQ(estimate_alpha(VectorXd::Zero(64), params(0, 1, 8.0), 5.5), 5.5);
}

}  // namespace
}  // namespace sdct
