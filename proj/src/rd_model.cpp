#include "sdct/rd_model.hpp"

#include <cmath>
#include <numbers>

#include "sdct/entropy.hpp"

namespace sdct {

void RdParams::validate() const {
  if (!(lambda >= 0.0)) throw InvalidArgument("RdParams: lambda must be >= 0");
  if (!(alpha > 0.0)) throw InvalidArgument("RdParams: alpha must be > 0");
  if (q_theta < 2) throw InvalidArgument("RdParams: q_theta must be >= 2");
  if (!(coeff_step > 0.0)) throw InvalidArgument("RdParams: coefficient step must be > 0");
}

double distortion(const VectorXd& samples, const SdctBasis<double>& basis, const VectorXd& coeffs) {
  if (samples.size() != coeffs.size() || samples.size() != basis.n() * basis.n())
    throw InvalidArgument("distortion: size mismatch");
  return (samples - basis.inverse(coeffs)).squaredNorm();
}

int count_nonzeros(const VectorXd& coeffs) {
  return static_cast<int>((coeffs.array() != 0.0).count());
}

double rate_coeffs_model(const VectorXd& coeffs, const RdParams& params) {
  return params.alpha * count_nonzeros(coeffs);
}

int count_subbands(std::span<const int> angle_indices) {
  if (angle_indices.empty()) return 0;
  int s = 1;
  for (std::size_t j = 1; j < angle_indices.size(); ++j)
    if (angle_indices[j] != angle_indices[j - 1]) ++s;
  return s;
}

double rate_angles_for_subbands(int subbands, int p, const RdParams& params) {
  const int angle_bits = ceil_log2(params.q_theta);
  switch (params.angle_mode) {
    case AngleRateMode::Indexed:
      return subbands * (angle_bits + ceil_log2(p));
    case AngleRateMode::Tree:
      return subbands * angle_bits + (2 * subbands - 1);
  }
  return 0.0;
}

double rate_angles(const AngleVector& angles, const RdParams& params) {
  return rate_angles_for_subbands(count_subbands(angles), angles.size(), params);
}

double hard_threshold(double value, double threshold) {
  return std::abs(value) > threshold ? value : 0.0;
}

VectorXd hard_threshold(const VectorXd& values, double threshold) {
  if (threshold < 0.0) throw InvalidArgument("hard_threshold: threshold must be >= 0");
  return values.unaryExpr([threshold](double v) { return hard_threshold(v, threshold); });
}

int quantize_index(double value, double step) {
  const double r = std::abs(value) / step;
  if (!(r < 2147483647.0)) throw InvalidArgument("quantize_index: value too large for the step");
  const int q = static_cast<int>(std::ceil(r - 0.5));
  return value < 0 ? -q : q;
}

std::vector<int> quantize_indices(const VectorXd& values, double step) {
  std::vector<int> out(static_cast<std::size_t>(values.size()));
  for (Eigen::Index i = 0; i < values.size(); ++i) out[static_cast<std::size_t>(i)] = quantize_index(values(i), step);
  return out;
}

VectorXd quantize_coeffs(const VectorXd& values, const RdParams& params) {
  params.validate();
  return values.unaryExpr([&](double v) { return quantize_index(v, params.coeff_step) * params.coeff_step; });
}

int quantize_angle_index(double value, int q_theta) {
  const double pi = std::numbers::pi;
  double v = std::fmod(value, pi);
  if (v < 0) v += pi;
  const double r = v * q_theta / pi;
  const int idx = static_cast<int>(std::ceil(r - 0.5));
  return idx >= q_theta ? 0 : idx;
}

double quantize_angle(double value, const RdParams& params) {
  return quantize_angle_index(value, params.q_theta) * std::numbers::pi / params.q_theta;
}

RdBreakdown make_breakdown(double distortion, double rate_coeffs, double rate_angles, int subbands,
                           int nonzeros, double lambda) {
  RdBreakdown b;
  b.distortion = distortion;
  b.rate_coeffs = rate_coeffs;
  b.rate_angles = rate_angles;
  b.J = distortion + lambda * (rate_coeffs + rate_angles);
  b.num_subbands = subbands;
  b.nonzeros = nonzeros;
  return b;
}

RdBreakdown evaluate_J(const VectorXd& samples, const AngleVector& angles, const VectorXd& coeffs,
                       const RdParams& params) {
  params.validate();
  const auto basis = build_sdct<double>(angles.n(), angles);
  const double d = distortion(samples, basis, coeffs);
  const int s = count_subbands(angles);
  return make_breakdown(d, rate_coeffs_model(coeffs, params), rate_angles_for_subbands(s, angles.size(), params), s,
                        count_nonzeros(coeffs), params.lambda);
}

RdBreakdown evaluate_J_from_dct(const VectorXd& dct_coeffs, const AngleVector& angles,
                                const VectorXd& coeffs, const RdParams& params) {
  const int n = angles.n();
  if (dct_coeffs.size() != n * n || coeffs.size() != n * n)
    throw InvalidArgument("evaluate_J_from_dct: size mismatch");
  const SdctBasis<double> basis(angles);
  VectorXd exact = dct_coeffs;
  rotate_forward<double>(basis.pairs(), basis.cosines(), basis.sines(), exact);
  const int s = count_subbands(angles);
  return make_breakdown((exact - coeffs).squaredNorm(), rate_coeffs_model(coeffs, params),
                        rate_angles_for_subbands(s, angles.size(), params), s, count_nonzeros(coeffs),
                        params.lambda);
}

double estimate_alpha_from_dct(const VectorXd& dct_coeffs, double coeff_step, double fallback) {
  const auto indices = quantize_indices(dct_coeffs, coeff_step);
  int nonzeros = 0;
  for (int v : indices) nonzeros += v != 0;
  if (nonzeros == 0) return fallback;
  return 2.0 * static_cast<double>(measure_block_rate(indices)) / nonzeros;
}

double estimate_alpha(const VectorXd& samples, const RdParams& params, double fallback) {
  const int n = block_side(static_cast<std::size_t>(samples.size()));
  return estimate_alpha_from_dct(dct2(build_dct_1d<double>(n), samples), params.coeff_step, fallback);
}

}  // namespace sdct
