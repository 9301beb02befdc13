#pragma once

// Quality metrics, RD sweeps and Bjontegaard deltas.

#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "sdct/codec.hpp"
#include "sdct/optimizer_bt.hpp"

namespace sdct {

/// PSNR returned for identical inputs.
inline constexpr double kPsnrInfinite = std::numeric_limits<double>::infinity();

double mse(const Image& reference, const Image& test);
/// 10 log10(peak^2 / MSE); kPsnrInfinite when MSE is zero.
double psnr(const Image& reference, const Image& test, double peak = 255.0);

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double data_range = 255.0;
};

/// Mean SSIM over all window positions fully inside the image, with a
/// normalized Gaussian window.
double ssim(const Image& reference, const Image& test, const SsimOptions& options = {});

struct RdPoint {
  double bits_per_pixel = 0.0;
  double bits_per_pixel_no_header = 0.0;
  double psnr_db = 0.0;
  double ssim = 0.0;
  double step = 0.0;
  double lambda = 0.0;
  double directional_fraction = 0.0;
  double mean_subbands = 0.0;
  std::size_t bits = 0;
};

struct RdCurve {
  std::string image;
  Algorithm algorithm = Algorithm::Dct;
  int n = 8;
  bool integer = false;
  std::vector<RdPoint> points;  ///< ascending bits_per_pixel

  /// Throws InvalidArgument unless bpp is strictly increasing.
  void validate() const;
};

/// Average PSNR gain of `test` over `reference` in dB: cubic fits of PSNR
/// against log10(rate), integrated over the overlapping log-rate interval.
/// Needs at least 4 points per curve.
double bd_psnr(const std::vector<double>& rate_ref, const std::vector<double>& psnr_ref,
               const std::vector<double>& rate_test, const std::vector<double>& psnr_test);
double bd_psnr(const RdCurve& reference, const RdCurve& test, bool include_header = true);

/// Least-squares polynomial coefficients, lowest degree first.
std::vector<double> polyfit(const std::vector<double>& x, const std::vector<double>& y, int degree);

/// Encodes and decodes `image` once per step; curve sorted by rate.
RdCurve rd_sweep(const Image& image, const EncodeParams& base, const std::vector<double>& steps,
                 const std::string& name = {});

/// SDCT-1 decision for one block of samples.
Sdct1Result baseline_sdct1(const VectorXd& samples, const RdParams& params);

struct UsageReport {
  Algorithm algorithm = Algorithm::Dct;
  int n = 8;
  std::size_t blocks = 0;
  std::size_t directional = 0;
  double fraction() const { return blocks ? static_cast<double>(directional) / blocks : 0.0; }
};

/// Share of blocks whose mode bit selects the directional transform.
UsageReport block_usage_report(std::span<const std::uint8_t> bitstream);

/// One row per point, with a header line.
void write_rd_csv(std::ostream& out, const std::vector<RdCurve>& curves);

struct BdRow {
  std::string image;
  int n = 8;
  Algorithm algorithm = Algorithm::Dct;
  bool integer = false;
  double bd_psnr_db = 0.0;
};

void write_bd_csv(std::ostream& out, const std::vector<BdRow>& rows);
/// gnuplot data: one index block per curve, columns bpp psnr ssim.
void write_gnuplot(std::ostream& out, const std::vector<RdCurve>& curves);

}  // namespace sdct
