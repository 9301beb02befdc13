#pragma once

// Block codec: tiling, per-block transform choice, quantization, angle
// signalling and the bitstream container.
//
// Bitstream layout (all multi-byte fields big-endian):
//
//   offset  size  field
//   0       4     magic "SDC1"
//   4       1     version (1)
//   5       4     width
//   9       4     height
//   13      1     block size n
//   14      8     coefficient step (IEEE-754 double)
//   22      8     lambda (IEEE-754 double)
//   30      1     q_theta
//   31      1     algorithm (0 dct, 1 sdct-1, 2 sdct-am, 3 sdct-bt)
//   32      1     arithmetic (0 float, 1 integer)
//   33      1     sample format (0 gray8, 1 signed 16-bit residual)
//
// followed by one byte-aligned payload per block in raster order:
//
//   mode bit            absent for the dct algorithm; 1 = directional
//   angle signalling    directional blocks only:
//                         sdct-1  one angle (ceil(log2 q) bits)
//                         sdct-am per subband: absolute end position
//                                 (ceil(log2 p) bits) then its angle; the
//                                 subband ending at p-1 is the last one
//                         sdct-bt tree labels breadth-first (1 = leaf), then
//                                 one angle per leaf in position order
//   coefficients        arithmetic-coded bit planes, see PlaneCoder
//   padding             zero bits up to the next byte

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <span>
#include <string>
#include <vector>

#include "sdct/entropy.hpp"
#include "sdct/rd_model.hpp"
#include "sdct/transform.hpp"

namespace sdct {

enum class Algorithm : std::uint8_t { Dct = 0, Sdct1 = 1, SdctAm = 2, SdctBt = 3 };
enum class Arithmetic : std::uint8_t { Float = 0, Integer = 1 };
enum class SampleFormat : std::uint8_t { Gray8 = 0, Residual16 = 1 };

/// File-system failures (open, read, write, rename).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string to_string(Algorithm a);
/// Accepts dct, sdct1, sdct-1, sdct-am, am, sdct-bt, bt.
Algorithm parse_algorithm(const std::string& name);

struct Image {
  int width = 0;
  int height = 0;
  SampleFormat format = SampleFormat::Gray8;
  std::vector<std::int32_t> samples;  ///< row-major

  Image() = default;
  Image(int w, int h, SampleFormat f = SampleFormat::Gray8, std::int32_t fill = 0);

  std::int32_t at(int row, int col) const { return samples[static_cast<std::size_t>(row) * width + col]; }
  std::int32_t& at(int row, int col) { return samples[static_cast<std::size_t>(row) * width + col]; }
  std::int32_t min_value() const { return format == SampleFormat::Gray8 ? 0 : -32768; }
  std::int32_t max_value() const { return format == SampleFormat::Gray8 ? 255 : 32767; }
  friend bool operator==(const Image&, const Image&) = default;
};

/// Binary PGM (P5), maxval up to 255.
Image read_pgm(const std::filesystem::path& path);
Image parse_pgm(std::span<const std::uint8_t> bytes);
void write_pgm(const std::filesystem::path& path, const Image& image);
std::vector<std::uint8_t> format_pgm(const Image& image);

/// Residual planes: ASCII line "SDR16 <width> <height>\n" then width*height
/// signed 16-bit big-endian samples.
Image read_res16(const std::filesystem::path& path);
Image parse_res16(std::span<const std::uint8_t> bytes);
void write_res16(const std::filesystem::path& path, const Image& image);
std::vector<std::uint8_t> format_res16(const Image& image);

/// Chooses the reader by content (P5 or SDR16 signature).
Image read_image(const std::filesystem::path& path);
void write_image(const std::filesystem::path& path, const Image& image);

/// Writes via a temporary file in the same directory, then renames.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

struct BitstreamHeader {
  static constexpr char kMagic[4] = {'S', 'D', 'C', '1'};
  static constexpr std::uint8_t kVersion = 1;
  static constexpr std::size_t kSize = 34;

  std::uint32_t width = 0;
  std::uint32_t height = 0;
  int n = 8;
  double coeff_step = 1.0;
  double lambda = 0.0;
  int q_theta = 8;
  Algorithm algorithm = Algorithm::Dct;
  Arithmetic arithmetic = Arithmetic::Float;
  SampleFormat format = SampleFormat::Gray8;

  /// Throws InvalidArgument on values the codec cannot represent.
  void validate() const;
  std::vector<std::uint8_t> serialize() const;
  /// Throws FormatError (BadMagic, UnsupportedVersion, Truncated, Malformed).
  static BitstreamHeader parse(std::span<const std::uint8_t> bytes);
  friend bool operator==(const BitstreamHeader&, const BitstreamHeader&) = default;
};

/// lambda = 0.85 * step^2 * c0. c0 was fitted to the slope -dD/dR of the
/// plain-DCT RD curves of the test corpus (median 0.0615 step^2 over block
/// sizes 8..32 and steps 8..64).
inline constexpr double kLambdaC0 = 0.072;
double paired_lambda(double step, double c0 = kLambdaC0);

struct EncodeParams {
  Algorithm algorithm = Algorithm::SdctAm;
  int n = 8;
  double coeff_step = 16.0;
  /// Unset: paired with the step via paired_lambda.
  std::optional<double> lambda;
  int q_theta = 8;
  Arithmetic arithmetic = Arithmetic::Float;
  int threads = 1;

  double effective_lambda() const { return lambda ? *lambda : paired_lambda(coeff_step); }
  void validate() const;
};

/// Per-block bit accounting and decision record.
struct BlockRecord {
  int row = 0;  ///< block row index
  int col = 0;
  bool directional = false;
  int mode_bits = 0;
  int structure_bits = 0;  ///< subband end indexes or tree labels
  int angle_value_bits = 0;
  int coeff_bits = 0;
  int pad_bits = 0;
  int subbands = 0;  ///< 0 for a DCT block
  double distortion = 0.0;  ///< pixel-domain SSE over the padded block
  double J = 0.0;
  double J_dct = 0.0;  ///< J the plain-DCT branch would have had
  std::vector<int> angle_indices;  ///< empty for a DCT block

  int payload_bits() const { return mode_bits + structure_bits + angle_value_bits + coeff_bits; }
  int total_bits() const { return payload_bits() + pad_bits; }
};

struct EncodeResult {
  std::vector<std::uint8_t> bitstream;
  Image reconstruction;
  BitstreamHeader header;
  std::vector<BlockRecord> blocks;

  std::size_t total_bits() const { return bitstream.size() * 8; }
  double bits_per_pixel(bool include_header = true) const;
  double directional_fraction() const;
  /// Mean subband count over directional blocks (0 if none).
  double mean_subbands() const;
  std::size_t angle_bits() const;
};

EncodeResult encode_image(const Image& image, const EncodeParams& params);

struct DecodeResult {
  BitstreamHeader header;
  Image image;
  std::vector<BlockRecord> blocks;  ///< mode, bit fields and angles as parsed
};

/// Throws FormatError on bad magic, unsupported version, truncation or a
/// malformed payload (including malformed subband trees).
DecodeResult decode_image(std::span<const std::uint8_t> bitstream);

/// Edge-replicated copy with dimensions rounded up to multiples of n.
Image pad_image(const Image& image, int n);

/// Signalling cost of a directional block's angles (without the mode bit).
int am_signalling_bits(int subbands, int p, int q_theta);
int bt_signalling_bits(int leaves, int q_theta);

}  // namespace sdct
