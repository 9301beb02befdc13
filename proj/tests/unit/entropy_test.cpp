#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "sdct/entropy.hpp"
#include "sdct/rd_model.hpp"
#include "test_util.hpp"

namespace sdct {
namespace {

TEST(BitIo, RoundTrip) {
  BitWriter w;
  w.put(true);
  w.put_bits(0x5, 3);
  w.put_bits(0x1234, 16);
  EXPECT_EQ(w.bit_count(), 20u);
  w.align_to_byte();
  EXPECT_EQ(w.bit_count(), 24u);
  BitReader r(w.bytes());
  EXPECT_TRUE(r.get());
  EXPECT_EQ(r.get_bits(3), 0x5u);
  EXPECT_EQ(r.get_bits(16), 0x1234u);
  EXPECT_EQ(r.get_bits(4), 0u);
  EXPECT_FALSE(r.overrun());
  r.get_bits(9);
  EXPECT_TRUE(r.overrun());
}

TEST(BitIo, CheckedReadThrowsOnTruncation) {
  const std::vector<std::uint8_t> one{0xA5};
  BitReader r(one);
  EXPECT_EQ(r.get_bits_checked(8), 0xA5u);
  try {
    r.get_checked();
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.kind(), FormatError::Kind::Truncated);
  }
}

TEST(ArithmeticCoder, RoundTripWithContexts) {
  std::mt19937 rng(1);
  std::bernoulli_distribution skew(0.15);
  std::vector<bool> bits(5000);
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = skew(rng);
  BitWriter w;
  ArithmeticEncoder enc(w);
  BitContext ctx, by;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (i % 7 == 0)
      enc.encode_bypass(bits[i]);
    else
      enc.encode(bits[i], ctx);
  }
  enc.finish();
  EXPECT_EQ(enc.bits_written(), w.bit_count());
  // skewed source compresses
  EXPECT_LT(w.bit_count(), bits.size() * 0.8);

  BitReader r(w.bytes());
  ArithmeticDecoder dec(r);
  BitContext dctx;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    const bool b = i % 7 == 0 ? dec.decode_bypass() : dec.decode(dctx);
    ASSERT_EQ(b, bits[i]) << i;
  }
  EXPECT_EQ(dec.bits_consumed(), enc.bits_written());
}

TEST(ArithmeticCoder, CountingOnlyMatchesWriting) {
  std::mt19937 rng(2);
  std::bernoulli_distribution coin(0.3);
  BitWriter w;
  ArithmeticEncoder a(w), b;
  BitContext ca, cb;
  for (int i = 0; i < 1000; ++i) {
    const bool v = coin(rng);
    a.encode(v, ca);
    b.encode(v, cb);
  }
  a.finish();
  b.finish();
  EXPECT_EQ(a.bits_written(), b.bits_written());
}

TEST(ArithmeticCoder, EmptyMessageIsTwoBits) {
  ArithmeticEncoder e;
  e.finish();
  EXPECT_EQ(e.bits_written(), 2u);
}

TEST(BitContext, AdaptsTowardObservedSymbol) {
  BitContext c;
  const auto start = c.p0;
  c.update(false);
  EXPECT_GT(c.p0, start);
  for (int i = 0; i < 200; ++i) c.update(true);
  EXPECT_GT(c.p0, 0u);
  EXPECT_LT(c.p0, BitContext::kOne / 8);
}

TEST(Planes, AllZeroIsThreeBits) {
  for (int n : {4, 8, 16, 32}) {
    const std::vector<int> z(static_cast<std::size_t>(n) * n, 0);
    EXPECT_EQ(measure_block_rate(z), 3u) << n;
    const auto buf = arith_encode_planes(z);
    EXPECT_EQ(buf.bits, 3u);
    EXPECT_EQ(arith_decode_planes(buf.bytes, n * n), z);
  }
}

TEST(Planes, RandomDenseRoundTripNearRawSize) {
  std::mt19937 rng(3);
  std::uniform_int_distribution<int> u(-7, 7);
  for (int n : {4, 8, 16}) {
    std::vector<int> v(static_cast<std::size_t>(n) * n);
    for (auto& x : v) x = u(rng);
    const auto buf = arith_encode_planes(v);
    EXPECT_EQ(arith_decode_planes(buf.bytes, n * n), v);
    // 16 symbols are too few for the contexts to settle
    if (n < 8) continue;
    const double entropy_bits = n * n * std::log2(15.0);
    EXPECT_GT(static_cast<double>(buf.bits), 0.85 * entropy_bits);
    EXPECT_LT(static_cast<double>(buf.bits), 1.3 * entropy_bits);
  }
}

TEST(Planes, ExtremeMagnitudes) {
  std::vector<int> v(64, 0);
  v[0] = (1 << 20) - 1;
  v[5] = -(1 << 19);
  v[63] = 1;
  EXPECT_EQ(arith_decode_planes(arith_encode_planes(v).bytes, 64), v);
}

TEST(Planes, NaturalDctIndicesBeatFixedLength) {
  for (const auto& x : test::natural_blocks(8, 20)) {
    const auto idx = quantize_indices(dct2(build_dct_1d<double>(8), x), 16.0);
    int maxabs = 0;
    for (int v : idx) maxabs = std::max(maxabs, std::abs(v));
    const int raw = 64 * (ceil_log2(2 * maxabs + 1) + 0);
    const auto buf = arith_encode_planes(idx);
    EXPECT_LT(buf.bits, static_cast<std::size_t>(raw));
    EXPECT_EQ(arith_decode_planes(buf.bytes, 64), idx);
  }
}

TEST(Planes, MeasureEqualsEncodedLength) {
  std::mt19937 rng(4);
  std::geometric_distribution<int> g(0.6);
  std::bernoulli_distribution sign(0.5);
  for (int t = 0; t < 100; ++t) {
    const int n = std::vector<int>{4, 8, 16, 32}[t % 4];
    std::vector<int> v(static_cast<std::size_t>(n) * n);
    for (auto& x : v) x = sign(rng) ? -g(rng) : g(rng);
    const auto buf = arith_encode_planes(v);
    EXPECT_EQ(measure_block_rate(v), buf.bits);
    EXPECT_EQ(buf.bytes.size(), (buf.bits + 7) / 8);
    EXPECT_EQ(arith_decode_planes(buf.bytes, n * n), v);
  }
}

TEST(Planes, SequentialSegmentsDecodeWithoutLengths) {
  std::mt19937 rng(5);
  std::uniform_int_distribution<int> u(-3, 3);
  std::vector<std::vector<int>> blocks(5, std::vector<int>(64));
  BitWriter w;
  for (auto& b : blocks) {
    for (auto& x : b) x = u(rng) * (rng() % 3 == 0);
    ArithmeticEncoder enc(w);
    PlaneCoder pc(8);
    pc.encode(enc, b);
    enc.finish();
  }
  BitReader r(w.bytes());
  for (const auto& b : blocks) {
    ArithmeticDecoder dec(r);
    PlaneCoder pc(8);
    EXPECT_EQ(pc.decode(dec), b);
    r.seek(dec.start_bit() + dec.bits_consumed());
  }
}

TEST(Planes, RejectsNonSquareInput) {
  const std::vector<int> v(10, 0);
  EXPECT_THROW(arith_encode_planes(v), InvalidArgument);
}

}  // namespace
}  // namespace sdct
