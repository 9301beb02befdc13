#include "sdct/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include <Eigen/QR>

namespace sdct {

namespace {

void check_same_shape(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height || a.samples.size() != b.samples.size())
    throw InvalidArgument("image dimensions differ");
}

using RowMajorXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

RowMajorXd as_matrix(const Image& img) {
  RowMajorXd m(img.height, img.width);
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c) m(r, c) = img.at(r, c);
  return m;
}

// Separable "valid" filtering with a symmetric kernel.
RowMajorXd filter_valid(const RowMajorXd& x, const std::vector<double>& k) {
  const int w = static_cast<int>(k.size());
  const Eigen::Index rows = x.rows() - w + 1;
  const Eigen::Index cols = x.cols() - w + 1;
  RowMajorXd tmp = RowMajorXd::Zero(x.rows(), cols);
  for (Eigen::Index r = 0; r < x.rows(); ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      double s = 0.0;
      for (int i = 0; i < w; ++i) s += k[static_cast<std::size_t>(i)] * x(r, c + i);
      tmp(r, c) = s;
    }
  RowMajorXd out = RowMajorXd::Zero(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      double s = 0.0;
      for (int i = 0; i < w; ++i) s += k[static_cast<std::size_t>(i)] * tmp(r + i, c);
      out(r, c) = s;
    }
  return out;
}

}  // namespace

double mse(const Image& reference, const Image& test) {
  check_same_shape(reference, test);
  double s = 0.0;
  for (std::size_t i = 0; i < reference.samples.size(); ++i) {
    const double d = static_cast<double>(reference.samples[i]) - test.samples[i];
    s += d * d;
  }
  return s / static_cast<double>(reference.samples.size());
}

double psnr(const Image& reference, const Image& test, double peak) {
  const double m = mse(reference, test);
  if (m == 0.0) return kPsnrInfinite;
  return 10.0 * std::log10(peak * peak / m);
}

double ssim(const Image& reference, const Image& test, const SsimOptions& o) {
  check_same_shape(reference, test);
  if (o.window < 1 || o.window % 2 == 0) throw InvalidArgument("ssim: window must be odd");
  if (reference.width < o.window || reference.height < o.window)
    throw InvalidArgument("ssim: image smaller than the window");

  std::vector<double> k(static_cast<std::size_t>(o.window));
  const int half = o.window / 2;
  double total = 0.0;
  for (int i = 0; i < o.window; ++i) {
    const double x = i - half;
    k[static_cast<std::size_t>(i)] = std::exp(-0.5 * x * x / (o.sigma * o.sigma));
    total += k[static_cast<std::size_t>(i)];
  }
  for (auto& v : k) v /= total;

  const RowMajorXd x = as_matrix(reference);
  const RowMajorXd y = as_matrix(test);
  const RowMajorXd ux = filter_valid(x, k);
  const RowMajorXd uy = filter_valid(y, k);
  const RowMajorXd uxx = filter_valid(x.cwiseProduct(x), k);
  const RowMajorXd uyy = filter_valid(y.cwiseProduct(y), k);
  const RowMajorXd uxy = filter_valid(x.cwiseProduct(y), k);

  const double c1 = (o.k1 * o.data_range) * (o.k1 * o.data_range);
  const double c2 = (o.k2 * o.data_range) * (o.k2 * o.data_range);
  const auto vx = (uxx.array() - ux.array().square());
  const auto vy = (uyy.array() - uy.array().square());
  const auto vxy = (uxy.array() - ux.array() * uy.array());
  const auto num = (2.0 * ux.array() * uy.array() + c1) * (2.0 * vxy + c2);
  const auto den = (ux.array().square() + uy.array().square() + c1) * (vx + vy + c2);
  return (num / den).mean();
}

void RdCurve::validate() const {
  for (std::size_t i = 1; i < points.size(); ++i)
    if (!(points[i].bits_per_pixel > points[i - 1].bits_per_pixel))
      throw InvalidArgument("RD curve: rates must be strictly increasing");
}

std::vector<double> polyfit(const std::vector<double>& x, const std::vector<double>& y, int degree) {
  if (x.size() != y.size()) throw InvalidArgument("polyfit: size mismatch");
  if (static_cast<int>(x.size()) < degree + 1) throw InvalidArgument("polyfit: not enough points");
  // Centre and scale the abscissa for conditioning, then map back.
  const double lo = *std::min_element(x.begin(), x.end());
  const double hi = *std::max_element(x.begin(), x.end());
  const double mid = 0.5 * (lo + hi);
  const double scale = hi > lo ? 0.5 * (hi - lo) : 1.0;
  const auto m = static_cast<Eigen::Index>(x.size());
  MatrixXd A(m, degree + 1);
  VectorXd b(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double t = (x[static_cast<std::size_t>(i)] - mid) / scale;
    double pw = 1.0;
    for (int d = 0; d <= degree; ++d) {
      A(i, d) = pw;
      pw *= t;
    }
    b(i) = y[static_cast<std::size_t>(i)];
  }
  const VectorXd ct = A.colPivHouseholderQr().solve(b);
  // Expand sum_d ct_d ((x - mid)/scale)^d into powers of x.
  std::vector<double> coeffs(static_cast<std::size_t>(degree + 1), 0.0);
  for (int d = 0; d <= degree; ++d) {
    // ((x - mid)/scale)^d = scale^-d * sum_j C(d,j) x^j (-mid)^(d-j)
    double binom = 1.0;
    for (int j = 0; j <= d; ++j) {
      if (j > 0) binom = binom * (d - j + 1) / j;
      coeffs[static_cast<std::size_t>(j)] += ct(d) * binom * std::pow(-mid, d - j) / std::pow(scale, d);
    }
  }
  return coeffs;
}

namespace {

double poly_integral(const std::vector<double>& c, double a, double b) {
  double s = 0.0;
  for (std::size_t d = 0; d < c.size(); ++d) {
    const double e = static_cast<double>(d + 1);
    s += c[d] * (std::pow(b, e) - std::pow(a, e)) / e;
  }
  return s;
}

}  // namespace

double bd_psnr(const std::vector<double>& rate_ref, const std::vector<double>& psnr_ref,
               const std::vector<double>& rate_test, const std::vector<double>& psnr_test) {
  if (rate_ref.size() != psnr_ref.size() || rate_test.size() != psnr_test.size())
    throw InvalidArgument("bd_psnr: size mismatch");
  if (rate_ref.size() < 4 || rate_test.size() < 4) throw InvalidArgument("bd_psnr: need at least 4 points per curve");
  auto logs = [](const std::vector<double>& r) {
    std::vector<double> out;
    for (double v : r) {
      if (!(v > 0.0)) throw InvalidArgument("bd_psnr: rates must be positive");
      out.push_back(std::log10(v));
    }
    return out;
  };
  const auto lr = logs(rate_ref);
  const auto lt = logs(rate_test);
  for (const auto* v : {&psnr_ref, &psnr_test})
    for (double p : *v)
      if (!std::isfinite(p)) throw InvalidArgument("bd_psnr: PSNR values must be finite");
  const double lo = std::max(*std::min_element(lr.begin(), lr.end()), *std::min_element(lt.begin(), lt.end()));
  const double hi = std::min(*std::max_element(lr.begin(), lr.end()), *std::max_element(lt.begin(), lt.end()));
  if (!(hi > lo)) throw InvalidArgument("bd_psnr: rate ranges do not overlap");
  const auto pr = polyfit(lr, psnr_ref, 3);
  const auto pt = polyfit(lt, psnr_test, 3);
  return (poly_integral(pt, lo, hi) - poly_integral(pr, lo, hi)) / (hi - lo);
}

double bd_psnr(const RdCurve& reference, const RdCurve& test, bool include_header) {
  auto split = [&](const RdCurve& c, std::vector<double>& r, std::vector<double>& p) {
    for (const auto& pt : c.points) {
      r.push_back(include_header ? pt.bits_per_pixel : pt.bits_per_pixel_no_header);
      p.push_back(pt.psnr_db);
    }
  };
  std::vector<double> rr, pr, rt, ptv;
  split(reference, rr, pr);
  split(test, rt, ptv);
  return bd_psnr(rr, pr, rt, ptv);
}

RdCurve rd_sweep(const Image& image, const EncodeParams& base, const std::vector<double>& steps,
                 const std::string& name) {
  if (steps.empty()) throw InvalidArgument("rd_sweep: empty step list");
  RdCurve curve;
  curve.image = name;
  curve.algorithm = base.algorithm;
  curve.n = base.n;
  curve.integer = base.arithmetic == Arithmetic::Integer;
  for (double step : steps) {
    EncodeParams p = base;
    p.coeff_step = step;
    const EncodeResult enc = encode_image(image, p);
    const DecodeResult dec = decode_image(enc.bitstream);
    RdPoint pt;
    pt.bits = enc.total_bits();
    pt.bits_per_pixel = enc.bits_per_pixel(true);
    pt.bits_per_pixel_no_header = enc.bits_per_pixel(false);
    pt.psnr_db = psnr(image, dec.image, image.format == SampleFormat::Gray8 ? 255.0 : 65535.0);
    pt.ssim = image.width >= 11 && image.height >= 11 ? ssim(image, dec.image) : 1.0;
    pt.step = step;
    pt.lambda = enc.header.lambda;
    pt.directional_fraction = enc.directional_fraction();
    pt.mean_subbands = enc.mean_subbands();
    curve.points.push_back(pt);
  }
  std::sort(curve.points.begin(), curve.points.end(),
            [](const RdPoint& a, const RdPoint& b) { return a.bits_per_pixel < b.bits_per_pixel; });
  return curve;
}

Sdct1Result baseline_sdct1(const VectorXd& samples, const RdParams& params) {
  const int n = block_side(static_cast<std::size_t>(samples.size()));
  return search_single_angle(dct2(build_dct_1d<double>(n), samples), params);
}

UsageReport block_usage_report(std::span<const std::uint8_t> bitstream) {
  const DecodeResult dec = decode_image(bitstream);
  UsageReport rep;
  rep.algorithm = dec.header.algorithm;
  rep.n = dec.header.n;
  rep.blocks = dec.blocks.size();
  for (const auto& b : dec.blocks) rep.directional += b.directional;
  return rep;
}

void write_rd_csv(std::ostream& out, const std::vector<RdCurve>& curves) {
  out << "image,algorithm,n,arithmetic,step,lambda,bits,bpp,bpp_no_header,psnr_db,ssim,directional_fraction,"
         "mean_subbands\n";
  out << std::setprecision(10);
  for (const auto& c : curves)
    for (const auto& p : c.points)
      out << c.image << ',' << to_string(c.algorithm) << ',' << c.n << ',' << (c.integer ? "integer" : "float") << ','
          << p.step << ',' << p.lambda << ',' << p.bits << ',' << p.bits_per_pixel << ',' << p.bits_per_pixel_no_header
          << ',' << p.psnr_db << ',' << p.ssim << ',' << p.directional_fraction << ',' << p.mean_subbands << '\n';
}

void write_bd_csv(std::ostream& out, const std::vector<BdRow>& rows) {
  out << "image,n,algorithm,arithmetic,bd_psnr_db_vs_dct\n" << std::setprecision(6);
  for (const auto& r : rows)
    out << r.image << ',' << r.n << ',' << to_string(r.algorithm) << ',' << (r.integer ? "integer" : "float") << ','
        << r.bd_psnr_db << '\n';
}

void write_gnuplot(std::ostream& out, const std::vector<RdCurve>& curves) {
  out << std::setprecision(10);
  bool first = true;
  for (const auto& c : curves) {
    if (!first) out << "\n\n";
    first = false;
    out << "# " << c.image << ' ' << to_string(c.algorithm) << " n=" << c.n << (c.integer ? " integer" : "") << '\n';
    out << "# bpp psnr_db ssim\n";
    for (const auto& p : c.points) out << p.bits_per_pixel << ' ' << p.psnr_db << ' ' << p.ssim << '\n';
  }
}

}  // namespace sdct
