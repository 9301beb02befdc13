#include "sdct/codec.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "sdct/integer_transform.hpp"
#include "sdct/optimizer_am.hpp"
#include "sdct/optimizer_bt.hpp"

namespace sdct {

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Dct: return "dct";
    case Algorithm::Sdct1: return "sdct1";
    case Algorithm::SdctAm: return "sdct-am";
    case Algorithm::SdctBt: return "sdct-bt";
  }
  return "unknown";
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "dct") return Algorithm::Dct;
  if (name == "sdct1" || name == "sdct-1") return Algorithm::Sdct1;
  if (name == "sdct-am" || name == "am") return Algorithm::SdctAm;
  if (name == "sdct-bt" || name == "bt") return Algorithm::SdctBt;
  throw InvalidArgument("unknown algorithm '" + name + "'");
}

Image::Image(int w, int h, SampleFormat f, std::int32_t fill) : width(w), height(h), format(f) {
  if (w < 1 || h < 1) throw InvalidArgument("image dimensions must be positive");
  samples.assign(static_cast<std::size_t>(w) * h, fill);
}

// ---------------------------------------------------------------- file I/O

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (f.bad()) throw IoError("read failed: " + path.string());
  return data;
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + tmp.string());
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot rename onto " + path.string());
  }
}

namespace {

// Whitespace/comment aware token reader for the ASCII part of PGM headers.
class HeaderTokens {
 public:
  explicit HeaderTokens(std::span<const std::uint8_t> b) : b_(b) {}

  std::string next() {
    for (;;) {
      while (pos_ < b_.size() && std::isspace(b_[pos_])) ++pos_;
      if (pos_ < b_.size() && b_[pos_] == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
        continue;
      }
      break;
    }
    std::string tok;
    while (pos_ < b_.size() && !std::isspace(b_[pos_]) && b_[pos_] != '#') tok.push_back(static_cast<char>(b_[pos_++]));
    if (tok.empty()) throw FormatError(FormatError::Kind::Truncated, "image header truncated");
    return tok;
  }

  int next_int(const char* what) {
    const std::string t = next();
    try {
      std::size_t used = 0;
      const long v = std::stol(t, &used);
      if (used != t.size() || v < 1 || v > (1L << 24)) throw std::out_of_range(t);
      return static_cast<int>(v);
    } catch (const std::logic_error&) {
      throw FormatError(FormatError::Kind::Malformed, std::string("bad ") + what + " '" + t + "'");
    }
  }

  // Exactly one whitespace byte separates the header from the raster.
  std::size_t data_start() {
    if (pos_ >= b_.size()) throw FormatError(FormatError::Kind::Truncated, "image header truncated");
    return pos_ + 1;
  }

 private:
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

}  // namespace

Image parse_pgm(std::span<const std::uint8_t> bytes) {
  HeaderTokens tok(bytes);
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5')
    throw FormatError(FormatError::Kind::BadMagic, "not a binary PGM (P5)");
  tok.next();
  const int w = tok.next_int("width");
  const int h = tok.next_int("height");
  const int maxval = tok.next_int("maxval");
  if (maxval > 255) throw FormatError(FormatError::Kind::Malformed, "only 8-bit PGM is supported");
  const std::size_t start = tok.data_start();
  const std::size_t count = static_cast<std::size_t>(w) * h;
  if (bytes.size() < start + count) throw FormatError(FormatError::Kind::Truncated, "PGM raster truncated");
  Image img(w, h, SampleFormat::Gray8);
  for (std::size_t i = 0; i < count; ++i) img.samples[i] = bytes[start + i];
  return img;
}

std::vector<std::uint8_t> format_pgm(const Image& image) {
  if (image.format != SampleFormat::Gray8) throw InvalidArgument("PGM output needs an 8-bit image");
  const std::string head = "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> out(head.begin(), head.end());
  for (auto v : image.samples) out.push_back(static_cast<std::uint8_t>(std::clamp(v, 0, 255)));
  return out;
}

Image read_pgm(const std::filesystem::path& path) { return parse_pgm(read_file(path)); }
void write_pgm(const std::filesystem::path& path, const Image& image) { write_file_atomic(path, format_pgm(image)); }

Image parse_res16(std::span<const std::uint8_t> bytes) {
  static constexpr char kTag[] = "SDR16";
  if (bytes.size() < 5 || std::memcmp(bytes.data(), kTag, 5) != 0)
    throw FormatError(FormatError::Kind::BadMagic, "not a SDR16 residual plane");
  HeaderTokens tok(bytes);
  tok.next();
  const int w = tok.next_int("width");
  const int h = tok.next_int("height");
  const std::size_t start = tok.data_start();
  const std::size_t count = static_cast<std::size_t>(w) * h;
  if (bytes.size() < start + 2 * count) throw FormatError(FormatError::Kind::Truncated, "residual raster truncated");
  Image img(w, h, SampleFormat::Residual16);
  for (std::size_t i = 0; i < count; ++i) {
    const auto hi = bytes[start + 2 * i];
    const auto lo = bytes[start + 2 * i + 1];
    img.samples[i] = static_cast<std::int16_t>(static_cast<std::uint16_t>((hi << 8) | lo));
  }
  return img;
}

std::vector<std::uint8_t> format_res16(const Image& image) {
  const std::string head = "SDR16 " + std::to_string(image.width) + " " + std::to_string(image.height) + "\n";
  std::vector<std::uint8_t> out(head.begin(), head.end());
  for (auto v : image.samples) {
    const auto u = static_cast<std::uint16_t>(static_cast<std::int16_t>(std::clamp(v, -32768, 32767)));
    out.push_back(static_cast<std::uint8_t>(u >> 8));
    out.push_back(static_cast<std::uint8_t>(u & 0xFF));
  }
  return out;
}

Image read_res16(const std::filesystem::path& path) { return parse_res16(read_file(path)); }
void write_res16(const std::filesystem::path& path, const Image& image) {
  write_file_atomic(path, format_res16(image));
}

Image read_image(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  if (bytes.size() >= 5 && std::memcmp(bytes.data(), "SDR16", 5) == 0) return parse_res16(bytes);
  return parse_pgm(bytes);
}

void write_image(const std::filesystem::path& path, const Image& image) {
  if (image.format == SampleFormat::Gray8)
    write_pgm(path, image);
  else
    write_res16(path, image);
}

// ------------------------------------------------------------------ header

namespace {

void put_be(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
  for (int i = bytes - 1; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_be(std::span<const std::uint8_t> in, std::size_t at, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v = (v << 8) | in[at + static_cast<std::size_t>(i)];
  return v;
}

bool supported_block_size(int n) { return n == 8 || n == 16 || n == 32; }

}  // namespace

void BitstreamHeader::validate() const {
  if (width < 1 || height < 1) throw InvalidArgument("header: empty image");
  if (!supported_block_size(n)) throw InvalidArgument("header: block size must be 8, 16 or 32");
  if (!(coeff_step > 0.0) || !std::isfinite(coeff_step)) throw InvalidArgument("header: step must be > 0");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("header: lambda must be >= 0");
  if (q_theta < 2 || q_theta > 255) throw InvalidArgument("header: q_theta must be in [2, 255]");
}

std::vector<std::uint8_t> BitstreamHeader::serialize() const {
  validate();
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  out.push_back(kVersion);
  put_be(out, width, 4);
  put_be(out, height, 4);
  out.push_back(static_cast<std::uint8_t>(n));
  put_be(out, std::bit_cast<std::uint64_t>(coeff_step), 8);
  put_be(out, std::bit_cast<std::uint64_t>(lambda), 8);
  out.push_back(static_cast<std::uint8_t>(q_theta));
  out.push_back(static_cast<std::uint8_t>(algorithm));
  out.push_back(static_cast<std::uint8_t>(arithmetic));
  out.push_back(static_cast<std::uint8_t>(format));
  return out;
}

BitstreamHeader BitstreamHeader::parse(std::span<const std::uint8_t> bytes) {
  using K = FormatError::Kind;
  if (bytes.size() < 4) throw FormatError(K::Truncated, "bitstream shorter than its magic");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError(K::BadMagic, "bad magic, not an SDC1 stream");
  if (bytes.size() < 5) throw FormatError(K::Truncated, "header truncated");
  if (bytes[4] != kVersion)
    throw FormatError(K::UnsupportedVersion, "unsupported stream version " + std::to_string(bytes[4]));
  if (bytes.size() < kSize) throw FormatError(K::Truncated, "header truncated");
  BitstreamHeader h;
  h.width = static_cast<std::uint32_t>(get_be(bytes, 5, 4));
  h.height = static_cast<std::uint32_t>(get_be(bytes, 9, 4));
  h.n = bytes[13];
  h.coeff_step = std::bit_cast<double>(get_be(bytes, 14, 8));
  h.lambda = std::bit_cast<double>(get_be(bytes, 22, 8));
  h.q_theta = bytes[30];
  if (bytes[31] > 3 || bytes[32] > 1 || bytes[33] > 1) throw FormatError(K::Malformed, "header: bad enum field");
  h.algorithm = static_cast<Algorithm>(bytes[31]);
  h.arithmetic = static_cast<Arithmetic>(bytes[32]);
  h.format = static_cast<SampleFormat>(bytes[33]);
  try {
    h.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(K::Malformed, e.what());
  }
  if (static_cast<std::uint64_t>(h.width) * h.height > (1ull << 30))
    throw FormatError(K::Malformed, "header: image too large");
  return h;
}

double paired_lambda(double step, double c0) { return 0.85 * step * step * c0; }

void EncodeParams::validate() const {
  if (!supported_block_size(n)) throw InvalidArgument("block size must be 8, 16 or 32");
  if (!(coeff_step > 0.0) || !std::isfinite(coeff_step)) throw InvalidArgument("step must be > 0");
  if (lambda && (!(*lambda >= 0.0) || !std::isfinite(*lambda))) throw InvalidArgument("lambda must be >= 0");
  if (q_theta < 2 || q_theta > 255) throw InvalidArgument("q_theta must be in [2, 255]");
  if (threads < 1) throw InvalidArgument("threads must be >= 1");
}

int am_signalling_bits(int subbands, int p, int q_theta) {
  return subbands * (ceil_log2(p) + ceil_log2(q_theta));
}

int bt_signalling_bits(int leaves, int q_theta) { return (2 * leaves - 1) + leaves * ceil_log2(q_theta); }

Image pad_image(const Image& image, int n) {
  if (image.width < 1 || image.height < 1) throw InvalidArgument("empty image");
  const int w = (image.width + n - 1) / n * n;
  const int h = (image.height + n - 1) / n * n;
  Image out(w, h, image.format);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) out.at(r, c) = image.at(std::min(r, image.height - 1), std::min(c, image.width - 1));
  return out;
}

// ------------------------------------------------------------- block layer

namespace {

// Everything a block coder needs that is shared by all blocks of one stream.
struct StreamContext {
  BitstreamHeader header;
  int n = 8;
  int p = 0;
  int angle_bits = 3;
  int end_bits = 0;
  std::int32_t lo = 0;
  std::int32_t hi = 255;
  DctBasis1D<double> dct;
  const IntegerDctTable* table = nullptr;

  explicit StreamContext(const BitstreamHeader& h)
      : header(h), n(h.n), p(num_pairs(h.n)), angle_bits(ceil_log2(h.q_theta)), end_bits(ceil_log2(num_pairs(h.n))),
        dct(build_dct_1d<double>(h.n)) {
    lo = h.format == SampleFormat::Gray8 ? 0 : -32768;
    hi = h.format == SampleFormat::Gray8 ? 255 : 32767;
    if (h.arithmetic == Arithmetic::Integer) table = &IntegerDctTables::standard().at(n);
  }

  bool integer() const { return table != nullptr; }
  double step() const { return header.coeff_step; }
};

constexpr double kIntScale = 1 << kIntegerCoeffFracBits;

// Reconstruction shared by encoder and decoder so both sides agree bit for bit.
std::vector<std::int32_t> reconstruct(const StreamContext& ctx, const AngleVector* angles,
                                      const std::vector<int>& indices) {
  const std::size_t N = indices.size();
  std::vector<std::int32_t> out(N);
  if (ctx.integer()) {
    VectorXl c(static_cast<Eigen::Index>(N));
    for (std::size_t i = 0; i < N; ++i) c(static_cast<Eigen::Index>(i)) = std::llround(indices[i] * ctx.step() * kIntScale);
    const AngleVector zero(ctx.n, ctx.header.q_theta);
    const VectorXl x = inverse_integer(angles ? *angles : zero, c, *ctx.table);
    for (std::size_t i = 0; i < N; ++i)
      out[i] = static_cast<std::int32_t>(std::clamp<std::int64_t>(x(static_cast<Eigen::Index>(i)), ctx.lo, ctx.hi));
    return out;
  }
  VectorXd c(static_cast<Eigen::Index>(N));
  for (std::size_t i = 0; i < N; ++i) c(static_cast<Eigen::Index>(i)) = indices[i] * ctx.step();
  const VectorXd x = angles ? SdctBasis<double>(*angles).inverse(c) : idct2(ctx.dct, c);
  for (std::size_t i = 0; i < N; ++i) {
    const double v = std::clamp(std::round(x(static_cast<Eigen::Index>(i))), double(ctx.lo), double(ctx.hi));
    out[i] = static_cast<std::int32_t>(v);
  }
  return out;
}

// Directional candidate produced by the chosen algorithm.
struct Candidate {
  AngleVector angles;
  std::vector<int> indices;
  SubbandTree tree;  // sdct-bt only
  int subbands = 0;
};

struct BlockOutput {
  std::vector<std::uint8_t> bytes;
  BlockRecord record;
  std::vector<std::int32_t> recon;
};

void write_am_signalling(BitWriter& w, const StreamContext& ctx, const AngleVector& a) {
  for (int j = 0; j < a.size(); ++j) {
    if (j + 1 == a.size() || a.index(j + 1) != a.index(j)) {
      w.put_bits(static_cast<std::uint64_t>(j), ctx.end_bits);
      w.put_bits(static_cast<std::uint64_t>(a.index(j)), ctx.angle_bits);
    }
  }
}

struct CodedPayload {
  BitWriter writer;
  int mode_bits = 0;
  int structure_bits = 0;
  int angle_value_bits = 0;
  int coeff_bits = 0;
  int payload_bits() const { return mode_bits + structure_bits + angle_value_bits + coeff_bits; }
};

CodedPayload code_payload(const StreamContext& ctx, const Candidate* dir, const std::vector<int>& indices) {
  CodedPayload out;
  BitWriter& w = out.writer;
  if (ctx.header.algorithm != Algorithm::Dct) {
    w.put(dir != nullptr);
    out.mode_bits = 1;
  }
  if (dir) {
    switch (ctx.header.algorithm) {
      case Algorithm::Sdct1:
        w.put_bits(static_cast<std::uint64_t>(dir->angles.index(0)), ctx.angle_bits);
        out.angle_value_bits = ctx.angle_bits;
        break;
      case Algorithm::SdctAm:
        write_am_signalling(w, ctx, dir->angles);
        out.structure_bits = dir->subbands * ctx.end_bits;
        out.angle_value_bits = dir->subbands * ctx.angle_bits;
        break;
      case Algorithm::SdctBt: {
        const auto labels = serialize_tree(dir->tree);
        for (bool b : labels) w.put(b);
        for (int id : dir->tree.leaves())
          w.put_bits(static_cast<std::uint64_t>(dir->tree.node(id).angle), ctx.angle_bits);
        out.structure_bits = static_cast<int>(labels.size());
        out.angle_value_bits = dir->tree.num_leaves() * ctx.angle_bits;
        break;
      }
      case Algorithm::Dct:
        break;
    }
  }
  const std::size_t before = w.bit_count();
  ArithmeticEncoder enc(w);
  PlaneCoder(ctx.n).encode(enc, indices);
  enc.finish();
  out.coeff_bits = static_cast<int>(w.bit_count() - before);
  return out;
}

double block_sse(const std::vector<std::int32_t>& a, const std::vector<std::int32_t>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    s += d * d;
  }
  return s;
}

// Indices of the directional coefficients for the final angles.
VectorXd coding_coefficients(const StreamContext& ctx, const AngleVector& angles, const std::vector<std::int32_t>& x,
                             const VectorXd& dct_coeffs) {
  if (ctx.integer()) {
    const VectorXl c = forward_integer(angles, x, *ctx.table);
    return c.cast<double>() / kIntScale;
  }
  const SdctBasis<double> basis(angles);
  VectorXd e = dct_coeffs;
  rotate_forward<double>(basis.pairs(), basis.cosines(), basis.sines(), e);
  return e;
}

Candidate make_candidate(const StreamContext& ctx, AngleVector angles, std::vector<int> indices, int subbands) {
  Candidate c;
  c.angles = std::move(angles);
  c.indices = std::move(indices);
  c.subbands = subbands;
  (void)ctx;
  return c;
}

// Directional candidates of the configured algorithm. SDCT-AM yields one per
// initial angle; the caller keeps the one with the lowest coded J.
std::vector<Candidate> directional_candidates(const StreamContext& ctx, const std::vector<std::int32_t>& x,
                                              const VectorXd& d, const RdParams& params) {
  std::vector<Candidate> out;
  const double step = ctx.step();
  switch (ctx.header.algorithm) {
    case Algorithm::Sdct1: {
      const Sdct1Result r = search_single_angle(d, params);
      AngleVector a(ctx.n, params.q_theta, r.angle_index);
      auto q = quantize_indices(coding_coefficients(ctx, a, x, d), step);
      out.push_back(make_candidate(ctx, std::move(a), std::move(q), 1));
      break;
    }
    case Algorithm::SdctAm: {
      for (int init = 0; init < params.q_theta; ++init) {
        const AmState st = run_sdct_am_from_dct(d, params, AngleVector(ctx.n, params.q_theta, init));
        const VectorXd e = coding_coefficients(ctx, st.angles, x, d);
        std::vector<int> q(static_cast<std::size_t>(e.size()));
        for (Eigen::Index i = 0; i < e.size(); ++i)
          q[static_cast<std::size_t>(i)] = static_cast<int>(std::lround(best_grid_coefficient(e(i), params) / step));
        const int s = count_subbands(st.angles);
        out.push_back(make_candidate(ctx, st.angles, std::move(q), s));
      }
      break;
    }
    case Algorithm::SdctBt: {
      RdParams tp = params;
      tp.angle_mode = AngleRateMode::Tree;
      BtResult r = run_sdct_bt_best(d, tp);
      auto q = quantize_indices(coding_coefficients(ctx, r.angles, x, d), step);
      Candidate c = make_candidate(ctx, r.angles, std::move(q), r.tree.num_leaves());
      c.tree = std::move(r.tree);
      out.push_back(std::move(c));
      break;
    }
    case Algorithm::Dct:
      break;
  }
  return out;
}

BlockOutput encode_block(const StreamContext& ctx, const std::vector<std::int32_t>& x) {
  const double lambda = ctx.header.lambda;
  const double step = ctx.step();

  VectorXd d;
  if (ctx.integer()) {
    d = integer_dct2(*ctx.table, x).cast<double>() / kIntScale;
  } else {
    VectorXd xs(static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) xs(static_cast<Eigen::Index>(i)) = x[i];
    d = dct2(ctx.dct, xs);
  }

  // Plain DCT branch.
  const std::vector<int> dct_indices = quantize_indices(d, step);
  CodedPayload dct_payload = code_payload(ctx, nullptr, dct_indices);
  std::vector<std::int32_t> dct_recon = reconstruct(ctx, nullptr, dct_indices);
  const double dct_D = block_sse(x, dct_recon);
  const double J_dct = dct_D + lambda * dct_payload.payload_bits();

  BlockOutput out;
  BlockRecord& rec = out.record;
  rec.J_dct = J_dct;

  bool use_dir = false;
  Candidate cand;
  CodedPayload dir_payload;
  std::vector<std::int32_t> dir_recon;
  double dir_D = 0.0;
  if (ctx.header.algorithm != Algorithm::Dct) {
    RdParams params;
    params.lambda = lambda;
    params.alpha = estimate_alpha_from_dct(d, step);
    params.q_theta = ctx.header.q_theta;
    params.coeff_step = step;
    params.angle_mode = AngleRateMode::Indexed;
    double J_dir = 0.0;
    bool have = false;
    for (Candidate& c : directional_candidates(ctx, x, d, params)) {
      CodedPayload pl = code_payload(ctx, &c, c.indices);
      std::vector<std::int32_t> rc = reconstruct(ctx, &c.angles, c.indices);
      const double D = block_sse(x, rc);
      const double J = D + lambda * pl.payload_bits();
      if (!have || J < J_dir) {
        have = true;
        J_dir = J;
        cand = std::move(c);
        dir_payload = std::move(pl);
        dir_recon = std::move(rc);
        dir_D = D;
      }
    }
    use_dir = have && J_dir < J_dct;
  }

  CodedPayload& chosen = use_dir ? dir_payload : dct_payload;
  rec.directional = use_dir;
  rec.mode_bits = chosen.mode_bits;
  rec.structure_bits = chosen.structure_bits;
  rec.angle_value_bits = chosen.angle_value_bits;
  rec.coeff_bits = chosen.coeff_bits;
  rec.distortion = use_dir ? dir_D : dct_D;
  rec.J = rec.distortion + lambda * chosen.payload_bits();
  if (use_dir) {
    rec.subbands = cand.subbands;
    rec.angle_indices = cand.angles.indices();
  }
  chosen.writer.align_to_byte();
  rec.pad_bits = static_cast<int>(chosen.writer.bit_count()) - chosen.payload_bits();
  out.bytes = chosen.writer.take_bytes();
  out.recon = use_dir ? std::move(dir_recon) : std::move(dct_recon);
  return out;
}

std::vector<std::int32_t> extract_block(const Image& img, int br, int bc, int n) {
  std::vector<std::int32_t> x(static_cast<std::size_t>(n) * n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) x[static_cast<std::size_t>(r * n + c)] = img.at(br * n + r, bc * n + c);
  return x;
}

void store_block(Image& img, int br, int bc, int n, const std::vector<std::int32_t>& x) {
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) img.at(br * n + r, bc * n + c) = x[static_cast<std::size_t>(r * n + c)];
}

Image crop(const Image& padded, int w, int h) {
  Image out(w, h, padded.format);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) out.at(r, c) = padded.at(r, c);
  return out;
}

// Runs fn(i) for i in [0, count) on up to `threads` workers; rethrows the
// first exception.
template <typename Fn>
void parallel_for(int count, int threads, Fn fn) {
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

EncodeResult encode_image(const Image& image, const EncodeParams& params) {
  params.validate();
  if (image.width < 1 || image.height < 1 || image.samples.size() != static_cast<std::size_t>(image.width) * image.height)
    throw InvalidArgument("encode_image: empty or inconsistent image");

  BitstreamHeader h;
  h.width = static_cast<std::uint32_t>(image.width);
  h.height = static_cast<std::uint32_t>(image.height);
  h.n = params.n;
  h.coeff_step = params.coeff_step;
  h.lambda = params.effective_lambda();
  h.q_theta = params.q_theta;
  h.algorithm = params.algorithm;
  h.arithmetic = params.arithmetic;
  h.format = image.format;
  h.validate();

  const StreamContext ctx(h);
  const int n = params.n;
  const Image padded = pad_image(image, n);
  const int bw = padded.width / n;
  const int bh = padded.height / n;

  std::vector<BlockOutput> blocks(static_cast<std::size_t>(bw) * bh);
  parallel_for(bw * bh, params.threads, [&](int i) {
    const int br = i / bw;
    const int bc = i % bw;
    BlockOutput out = encode_block(ctx, extract_block(padded, br, bc, n));
    out.record.row = br;
    out.record.col = bc;
    blocks[static_cast<std::size_t>(i)] = std::move(out);
  });

  EncodeResult res;
  res.header = h;
  res.bitstream = h.serialize();
  Image recon(padded.width, padded.height, padded.format);
  for (int i = 0; i < bw * bh; ++i) {
    auto& b = blocks[static_cast<std::size_t>(i)];
    res.bitstream.insert(res.bitstream.end(), b.bytes.begin(), b.bytes.end());
    store_block(recon, i / bw, i % bw, n, b.recon);
    res.blocks.push_back(std::move(b.record));
  }
  res.reconstruction = crop(recon, image.width, image.height);
  return res;
}

double EncodeResult::bits_per_pixel(bool include_header) const {
  const double px = static_cast<double>(header.width) * header.height;
  double bits = static_cast<double>(total_bits());
  if (!include_header) bits -= 8.0 * BitstreamHeader::kSize;
  return bits / px;
}

double EncodeResult::directional_fraction() const {
  if (blocks.empty()) return 0.0;
  std::size_t k = 0;
  for (const auto& b : blocks) k += b.directional;
  return static_cast<double>(k) / static_cast<double>(blocks.size());
}

double EncodeResult::mean_subbands() const {
  double s = 0.0;
  int k = 0;
  for (const auto& b : blocks)
    if (b.directional) {
      s += b.subbands;
      ++k;
    }
  return k ? s / k : 0.0;
}

std::size_t EncodeResult::angle_bits() const {
  std::size_t s = 0;
  for (const auto& b : blocks) s += static_cast<std::size_t>(b.structure_bits + b.angle_value_bits);
  return s;
}

// ----------------------------------------------------------------- decoder

namespace {

std::uint64_t read_bits(BitReader& r, int count) {
  try {
    return r.get_bits_checked(count);
  } catch (const FormatError&) {
    throw FormatError(FormatError::Kind::Truncated, "bitstream truncated inside a block header");
  }
}

AngleVector read_am_angles(BitReader& r, const StreamContext& ctx, BlockRecord& rec) {
  AngleVector a(ctx.n, ctx.header.q_theta);
  int begin = 0;
  while (begin < ctx.p) {
    const int end = static_cast<int>(read_bits(r, ctx.end_bits));
    const int angle = static_cast<int>(read_bits(r, ctx.angle_bits));
    if (end < begin || end >= ctx.p) throw FormatError(FormatError::Kind::Malformed, "subband end out of order");
    if (angle >= ctx.header.q_theta) throw FormatError(FormatError::Kind::Malformed, "angle index out of range");
    for (int j = begin; j <= end; ++j) a.set_index(j, angle);
    begin = end + 1;
    ++rec.subbands;
  }
  rec.structure_bits = rec.subbands * ctx.end_bits;
  rec.angle_value_bits = rec.subbands * ctx.angle_bits;
  return a;
}

AngleVector read_bt_angles(BitReader& r, const StreamContext& ctx, BlockRecord& rec) {
  int labels = 0;
  SubbandTree tree = deserialize_tree(
      [&]() -> bool {
        ++labels;
        try {
          return r.get_checked();
        } catch (const FormatError&) {
          throw FormatError(FormatError::Kind::Truncated, "bitstream truncated inside a subband tree");
        }
      },
      ctx.p);
  for (int id : tree.leaves()) {
    const int angle = static_cast<int>(read_bits(r, ctx.angle_bits));
    if (angle >= ctx.header.q_theta) throw FormatError(FormatError::Kind::Malformed, "angle index out of range");
    tree.set_angle(id, angle);
  }
  rec.subbands = tree.num_leaves();
  rec.structure_bits = labels;
  rec.angle_value_bits = rec.subbands * ctx.angle_bits;
  return expand_tree_to_angles(tree, ctx.n, ctx.header.q_theta);
}

}  // namespace

DecodeResult decode_image(std::span<const std::uint8_t> bitstream) {
  DecodeResult res;
  res.header = BitstreamHeader::parse(bitstream);
  const StreamContext ctx(res.header);
  const int n = ctx.n;
  const int w = static_cast<int>(res.header.width);
  const int h = static_cast<int>(res.header.height);
  const int bw = (w + n - 1) / n;
  const int bh = (h + n - 1) / n;

  Image recon(bw * n, bh * n, res.header.format);
  BitReader r(bitstream, 8 * BitstreamHeader::kSize);
  const std::size_t total = r.size_bits();
  for (int i = 0; i < bw * bh; ++i) {
    const std::size_t block_start = r.position();
    if (block_start >= total) throw FormatError(FormatError::Kind::Truncated, "bitstream ends before the last block");
    BlockRecord rec;
    rec.row = i / bw;
    rec.col = i % bw;
    AngleVector angles;
    if (res.header.algorithm != Algorithm::Dct) {
      rec.mode_bits = 1;
      rec.directional = read_bits(r, 1) != 0;
    }
    if (rec.directional) {
      switch (res.header.algorithm) {
        case Algorithm::Sdct1: {
          const int a = static_cast<int>(read_bits(r, ctx.angle_bits));
          if (a >= ctx.header.q_theta) throw FormatError(FormatError::Kind::Malformed, "angle index out of range");
          angles = AngleVector(n, ctx.header.q_theta, a);
          rec.subbands = 1;
          rec.angle_value_bits = ctx.angle_bits;
          break;
        }
        case Algorithm::SdctAm: angles = read_am_angles(r, ctx, rec); break;
        case Algorithm::SdctBt: angles = read_bt_angles(r, ctx, rec); break;
        case Algorithm::Dct: break;
      }
      rec.angle_indices = angles.indices();
    }
    const std::size_t coeff_start = r.position();
    ArithmeticDecoder dec(r);
    std::vector<int> indices;
    try {
      indices = PlaneCoder(n).decode(dec);
    } catch (const FormatError&) {
      throw;
    } catch (const std::exception& e) {
      throw FormatError(FormatError::Kind::Malformed, std::string("coefficient data: ") + e.what());
    }
    rec.coeff_bits = static_cast<int>(dec.bits_consumed());
    std::size_t end = coeff_start + dec.bits_consumed();
    if (end > total) throw FormatError(FormatError::Kind::Truncated, "bitstream truncated inside coefficient data");
    const std::size_t aligned = (end + 7) / 8 * 8;
    rec.pad_bits = static_cast<int>(aligned - end);
    r.seek(aligned);
    (void)block_start;

    store_block(recon, rec.row, rec.col, n, reconstruct(ctx, rec.directional ? &angles : nullptr, indices));
    res.blocks.push_back(std::move(rec));
  }
  if (r.position() != total) throw FormatError(FormatError::Kind::Malformed, "trailing bytes after the last block");
  res.image = crop(recon, w, h);
  return res;
}

}  // namespace sdct
