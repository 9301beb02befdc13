#pragma once

// Bit-level I/O and the adaptive binary arithmetic coder used for quantized
// coefficients.
//
// The arithmetic coder is a 16-bit-register binary coder with bit-stuffing
// ("bits to follow") renormalization. Every renormalization step produces
// exactly one output bit and termination adds two, so the encoder's bit count
// and the decoder's consumed-bit count agree exactly. That lets a decoder find
// the end of a coded segment without a length prefix.

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace sdct {

/// Raised by decoders on malformed input.
class FormatError : public std::runtime_error {
 public:
  enum class Kind { BadMagic, UnsupportedVersion, Truncated, MalformedTree, Malformed };

  FormatError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// MSB-first bit writer.
class BitWriter {
 public:
  void put(bool bit);
  void put_bits(std::uint64_t value, int count);
  void align_to_byte();

  std::size_t bit_count() const { return bits_; }
  const std::vector<std::uint8_t>& bytes() const { return bytes_; }
  std::vector<std::uint8_t> take_bytes() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
  std::size_t bits_ = 0;
};

/// MSB-first bit reader over a byte span. Reads past the end return zero
/// bits and are recorded, so callers can detect truncation after the fact.
class BitReader {
 public:
  explicit BitReader(std::span<const std::uint8_t> data, std::size_t start_bit = 0)
      : data_(data), pos_(start_bit) {}

  bool get();
  std::uint64_t get_bits(int count);
  /// Strict variant: throws FormatError::Truncated when data runs out.
  bool get_checked();
  std::uint64_t get_bits_checked(int count);

  std::size_t position() const { return pos_; }
  void seek(std::size_t bit) { pos_ = bit; }
  std::size_t size_bits() const { return data_.size() * 8; }
  bool overrun() const { return pos_ > size_bits(); }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

/// Adaptive probability of a binary event, 12-bit fixed point.
struct BitContext {
  static constexpr int kBits = 12;
  static constexpr std::uint32_t kOne = 1u << kBits;
  static constexpr int kAdaptShift = 4;

  std::uint32_t p0 = kOne / 2;  ///< probability that the next bit is 0

  void update(bool bit);
};

/// Binary arithmetic encoder writing to a BitWriter, or only counting bits
/// when constructed without one.
class ArithmeticEncoder {
 public:
  ArithmeticEncoder() = default;
  explicit ArithmeticEncoder(BitWriter& out) : out_(&out) {}

  void encode(bool bit, BitContext& ctx);
  /// Equiprobable bit without a context.
  void encode_bypass(bool bit);
  /// Flushes the final interval; must be called exactly once.
  void finish();

  std::size_t bits_written() const { return bits_; }

 private:
  void emit(bool bit);
  void renormalize();

  BitWriter* out_ = nullptr;
  std::uint32_t low_ = 0;
  std::uint32_t high_ = 0xFFFF;
  std::uint32_t pending_ = 0;
  std::size_t bits_ = 0;
  bool finished_ = false;
};

class ArithmeticDecoder {
 public:
  /// Starts decoding at the reader's current position.
  explicit ArithmeticDecoder(BitReader& in);

  bool decode(BitContext& ctx);
  bool decode_bypass();

  /// Bits the matching encoder produced for the symbols decoded so far,
  /// including its two termination bits.
  std::size_t bits_consumed() const { return shifts_ + 2; }
  std::size_t start_bit() const { return start_; }

 private:
  void renormalize();

  BitReader& in_;
  std::size_t start_ = 0;
  std::uint32_t low_ = 0;
  std::uint32_t high_ = 0xFFFF;
  std::uint32_t value_ = 0;
  std::size_t shifts_ = 0;
};

/// Context set for bit-plane coding of one block of quantization indices.
/// Indices are laid out as coefficient index k*n + l and visited in zigzag
/// order. Syntax per block:
///   1. last: one plus the zigzag position of the last nonzero (0 = empty);
///   2. planes: bit length of the largest magnitude, unary;
///   3. for each plane from the most significant down, for each position up
///      to `last`: a significance bin (plus a sign bin on becoming
///      significant) or a refinement bin.
class PlaneCoder {
 public:
  explicit PlaneCoder(int n);

  void encode(ArithmeticEncoder& enc, std::span<const int> indices);
  std::vector<int> decode(ArithmeticDecoder& dec);

  int n() const { return n_; }

  static constexpr int kMaxPlanes = 30;

 private:
  int significance_context(int pos, int plane, int top_plane, const std::vector<std::uint8_t>& sig) const;

  int n_ = 0;
  int last_bits_ = 0;
  std::vector<int> scan_;       ///< zigzag position -> coefficient index
  std::vector<int> band_;       ///< coefficient index -> frequency band
  std::vector<BitContext> last_nonempty_;
  std::vector<BitContext> last_value_;
  std::vector<BitContext> planes_;
  std::vector<BitContext> significance_;
  std::vector<BitContext> sign_;
  std::vector<BitContext> refinement_;
};

/// Bit buffer with exact bit length.
struct BitBuffer {
  std::vector<std::uint8_t> bytes;
  std::size_t bits = 0;
};

/// Losslessly code one block of n*n quantization indices with fresh contexts.
BitBuffer arith_encode_planes(std::span<const int> indices);
/// Decode `count` (= n*n) indices from the start of `bits`.
std::vector<int> arith_decode_planes(std::span<const std::uint8_t> bits, int count);
/// Exact bit count arith_encode_planes would produce.
std::size_t measure_block_rate(std::span<const int> indices);

}  // namespace sdct
