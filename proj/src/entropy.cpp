#include "sdct/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "sdct/transform.hpp"

namespace sdct {
namespace {

constexpr std::uint32_t kHalf = 0x8000;
constexpr std::uint32_t kQuarter = 0x4000;
constexpr std::uint32_t kThreeQuarters = 0xC000;
constexpr std::uint32_t kMinProb = 32;
constexpr std::uint32_t kMaxProb = BitContext::kOne - 32;

constexpr std::uint32_t kSignificanceInit = 3072;

// Frequency band of a coefficient from its anti-diagonal k + l.
int band_of(int d) {
  if (d <= 2) return d;
  if (d <= 4) return 3;
  if (d <= 7) return 4;
  if (d <= 11) return 5;
  if (d <= 17) return 6;
  return 7;
}

constexpr int kBands = 8;
constexpr int kPlaneClasses = 3;
constexpr int kNeighbourClasses = 3;

int bit_length(unsigned v) {
  int b = 0;
  while (v) {
    ++b;
    v >>= 1;
  }
  return b;
}

}  // namespace

void BitWriter::put(bool bit) {
  if (bits_ % 8 == 0) bytes_.push_back(0);
  if (bit) bytes_.back() |= static_cast<std::uint8_t>(0x80u >> (bits_ % 8));
  ++bits_;
}

void BitWriter::put_bits(std::uint64_t value, int count) {
  for (int i = count - 1; i >= 0; --i) put((value >> i) & 1u);
}

void BitWriter::align_to_byte() {
  while (bits_ % 8 != 0) put(false);
}

bool BitReader::get() {
  const std::size_t p = pos_++;
  if (p >= size_bits()) return false;
  return (data_[p / 8] >> (7 - p % 8)) & 1u;
}

std::uint64_t BitReader::get_bits(int count) {
  std::uint64_t v = 0;
  for (int i = 0; i < count; ++i) v = (v << 1) | static_cast<std::uint64_t>(get());
  return v;
}

bool BitReader::get_checked() {
  if (pos_ >= size_bits()) throw FormatError(FormatError::Kind::Truncated, "bitstream truncated");
  return get();
}

std::uint64_t BitReader::get_bits_checked(int count) {
  std::uint64_t v = 0;
  for (int i = 0; i < count; ++i) v = (v << 1) | static_cast<std::uint64_t>(get_checked());
  return v;
}

void BitContext::update(bool bit) {
  if (bit) {
    p0 -= p0 >> kAdaptShift;
  } else {
    p0 += (kOne - p0) >> kAdaptShift;
  }
  p0 = std::clamp(p0, kMinProb, kMaxProb);
}

void ArithmeticEncoder::emit(bool bit) {
  if (out_) out_->put(bit);
  ++bits_;
  for (; pending_ > 0; --pending_) {
    if (out_) out_->put(!bit);
    ++bits_;
  }
}

void ArithmeticEncoder::renormalize() {
  for (;;) {
    if (high_ < kHalf) {
      emit(false);
    } else if (low_ >= kHalf) {
      emit(true);
      low_ -= kHalf;
      high_ -= kHalf;
    } else if (low_ >= kQuarter && high_ < kThreeQuarters) {
      ++pending_;
      low_ -= kQuarter;
      high_ -= kQuarter;
    } else {
      break;
    }
    low_ = 2 * low_;
    high_ = 2 * high_ + 1;
  }
}

void ArithmeticEncoder::encode(bool bit, BitContext& ctx) {
  const std::uint32_t range = high_ - low_ + 1;
  const std::uint32_t split = low_ + ((range * ctx.p0) >> BitContext::kBits) - 1;
  if (bit) {
    low_ = split + 1;
  } else {
    high_ = split;
  }
  ctx.update(bit);
  renormalize();
}

void ArithmeticEncoder::encode_bypass(bool bit) {
  BitContext even;
  encode(bit, even);
}

void ArithmeticEncoder::finish() {
  if (finished_) return;
  ++pending_;
  emit(low_ >= kQuarter);
  finished_ = true;
}

ArithmeticDecoder::ArithmeticDecoder(BitReader& in) : in_(in), start_(in.position()) {
  value_ = static_cast<std::uint32_t>(in_.get_bits(16));
}

void ArithmeticDecoder::renormalize() {
  for (;;) {
    if (high_ < kHalf) {
      // nothing to subtract
    } else if (low_ >= kHalf) {
      low_ -= kHalf;
      high_ -= kHalf;
      value_ -= kHalf;
    } else if (low_ >= kQuarter && high_ < kThreeQuarters) {
      low_ -= kQuarter;
      high_ -= kQuarter;
      value_ -= kQuarter;
    } else {
      break;
    }
    low_ = 2 * low_;
    high_ = 2 * high_ + 1;
    value_ = 2 * value_ + static_cast<std::uint32_t>(in_.get());
    ++shifts_;
  }
}

bool ArithmeticDecoder::decode(BitContext& ctx) {
  const std::uint32_t range = high_ - low_ + 1;
  const std::uint32_t split = low_ + ((range * ctx.p0) >> BitContext::kBits) - 1;
  const bool bit = value_ > split;
  if (bit) {
    low_ = split + 1;
  } else {
    high_ = split;
  }
  ctx.update(bit);
  renormalize();
  return bit;
}

bool ArithmeticDecoder::decode_bypass() {
  BitContext even;
  return decode(even);
}

PlaneCoder::PlaneCoder(int n) : n_(n) {
  if (n < 1) throw InvalidArgument("PlaneCoder: block size must be positive");
  const int count = n * n;
  last_bits_ = ceil_log2(count);
  band_.resize(static_cast<std::size_t>(count));
  for (auto [r, c] : zigzag_scan(n)) {
    scan_.push_back(r * n + c);
    band_[static_cast<std::size_t>(r * n + c)] = band_of(r + c);
  }
  last_nonempty_.resize(1);
  planes_.resize(8);
  significance_.assign(kBands * kPlaneClasses * kNeighbourClasses, BitContext{kSignificanceInit});
  sign_.resize(1);
  refinement_.resize(kPlaneClasses);
}

int PlaneCoder::significance_context(int pos, int plane, int top_plane,
                                     const std::vector<std::uint8_t>& sig) const {
  const int idx = scan_[static_cast<std::size_t>(pos)];
  const int k = idx / n_;
  const int l = idx % n_;
  int nb = 0;
  if (l > 0) nb += sig[static_cast<std::size_t>(idx - 1)];
  if (k > 0) nb += sig[static_cast<std::size_t>(idx - n_)];
  const int pc = std::min(top_plane - plane, kPlaneClasses - 1);
  return (band_[static_cast<std::size_t>(idx)] * kPlaneClasses + pc) * kNeighbourClasses + nb;
}

void PlaneCoder::encode(ArithmeticEncoder& enc, std::span<const int> indices) {
  const int count = n_ * n_;
  if (static_cast<int>(indices.size()) != count) throw InvalidArgument("PlaneCoder: expected n*n indices");

  int last = 0;
  unsigned max_mag = 0;
  for (int pos = 0; pos < count; ++pos) {
    const int v = indices[static_cast<std::size_t>(scan_[static_cast<std::size_t>(pos)])];
    if (v != 0) {
      last = pos + 1;
      max_mag = std::max(max_mag, static_cast<unsigned>(std::abs(v)));
    }
  }
  const int planes = bit_length(max_mag);
  if (planes > kMaxPlanes) throw InvalidArgument("PlaneCoder: coefficient magnitude too large");

  enc.encode(last > 0, last_nonempty_[0]);
  if (last == 0) return;
  for (int b = last_bits_ - 1; b >= 0; --b) enc.encode_bypass(((last - 1) >> b) & 1);

  for (int k = 1; k < kMaxPlanes; ++k) {
    const bool more = planes > k;
    enc.encode(more, planes_[static_cast<std::size_t>(std::min(k - 1, 7))]);
    if (!more) break;
  }

  std::vector<std::uint8_t> sig(static_cast<std::size_t>(count), 0);
  const int top = planes - 1;
  for (int plane = top; plane >= 0; --plane) {
    for (int pos = 0; pos < last; ++pos) {
      const int idx = scan_[static_cast<std::size_t>(pos)];
      const int v = indices[static_cast<std::size_t>(idx)];
      const unsigned mag = static_cast<unsigned>(std::abs(v));
      const bool bit = (mag >> plane) & 1u;
      if (!sig[static_cast<std::size_t>(idx)]) {
        enc.encode(bit, significance_[static_cast<std::size_t>(significance_context(pos, plane, top, sig))]);
        if (bit) {
          sig[static_cast<std::size_t>(idx)] = 1;
          enc.encode(v < 0, sign_[0]);
        }
      } else {
        enc.encode(bit, refinement_[static_cast<std::size_t>(std::min(top - plane, kPlaneClasses - 1))]);
      }
    }
  }
}

std::vector<int> PlaneCoder::decode(ArithmeticDecoder& dec) {
  const int count = n_ * n_;
  std::vector<int> out(static_cast<std::size_t>(count), 0);
  if (!dec.decode(last_nonempty_[0])) return out;
  int last = 0;
  for (int b = last_bits_ - 1; b >= 0; --b) last = (last << 1) | static_cast<int>(dec.decode_bypass());
  last += 1;
  if (last > count) throw FormatError(FormatError::Kind::Malformed, "coefficient block: last position out of range");

  int planes = 1;
  for (int k = 1; k < kMaxPlanes; ++k) {
    if (!dec.decode(planes_[static_cast<std::size_t>(std::min(k - 1, 7))])) break;
    ++planes;
  }

  std::vector<std::uint8_t> sig(static_cast<std::size_t>(count), 0);
  std::vector<std::uint8_t> negative(static_cast<std::size_t>(count), 0);
  std::vector<unsigned> mag(static_cast<std::size_t>(count), 0);
  const int top = planes - 1;
  for (int plane = top; plane >= 0; --plane) {
    for (int pos = 0; pos < last; ++pos) {
      const auto idx = static_cast<std::size_t>(scan_[static_cast<std::size_t>(pos)]);
      if (!sig[idx]) {
        const bool bit =
            dec.decode(significance_[static_cast<std::size_t>(significance_context(pos, plane, top, sig))]);
        if (bit) {
          sig[idx] = 1;
          mag[idx] |= 1u << plane;
          negative[idx] = dec.decode(sign_[0]);
        }
      } else {
        if (dec.decode(refinement_[static_cast<std::size_t>(std::min(top - plane, kPlaneClasses - 1))]))
          mag[idx] |= 1u << plane;
      }
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    const int m = static_cast<int>(mag[i]);
    out[i] = negative[i] ? -m : m;
  }
  return out;
}

BitBuffer arith_encode_planes(std::span<const int> indices) {
  BitWriter w;
  ArithmeticEncoder enc(w);
  PlaneCoder coder(block_side(indices.size()));
  coder.encode(enc, indices);
  enc.finish();
  BitBuffer out;
  out.bits = w.bit_count();
  out.bytes = w.take_bytes();
  return out;
}

std::vector<int> arith_decode_planes(std::span<const std::uint8_t> bits, int count) {
  BitReader r(bits);
  ArithmeticDecoder dec(r);
  PlaneCoder coder(block_side(static_cast<std::size_t>(count)));
  return coder.decode(dec);
}

std::size_t measure_block_rate(std::span<const int> indices) {
  ArithmeticEncoder enc;
  PlaneCoder coder(block_side(indices.size()));
  coder.encode(enc, indices);
  enc.finish();
  return enc.bits_written();
}

}  // namespace sdct
