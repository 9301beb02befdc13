#include "sdct/integer_transform.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace sdct {
namespace {

std::int64_t round_shift(std::int64_t x, int shift) {
  if (shift <= 0) return x << -shift;
  return (x + (std::int64_t{1} << (shift - 1))) >> shift;
}

void check_size(const IntegerDctTable& table, std::size_t count) {
  if (count != static_cast<std::size_t>(table.n) * table.n)
    throw InvalidArgument("integer transform: block size does not match table");
}

void rotate_fixed(const std::vector<RotationPair>& pairs, const FixedRotation& rot, VectorXl& c,
                  bool inverse) {
  for (const auto& p : pairs) {
    const std::int64_t cs = rot.cosines[static_cast<std::size_t>(p.zigzag_position)];
    const std::int64_t sn = rot.sines[static_cast<std::size_t>(p.zigzag_position)];
    const std::int64_t a = c(p.i);
    const std::int64_t b = c(p.j);
    if (!inverse) {
      c(p.i) = round_shift(cs * a - sn * b, kRotationFracBits);
      c(p.j) = round_shift(sn * a + cs * b, kRotationFracBits);
    } else {
      c(p.i) = round_shift(cs * a + sn * b, kRotationFracBits);
      c(p.j) = round_shift(-sn * a + cs * b, kRotationFracBits);
    }
  }
}

}  // namespace

IntegerDctTables IntegerDctTables::parse(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  IntegerDctTables out;
  bool have_version = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "sdct-intdct") {
      int version = 0;
      ls >> version;
      if (version != 1) throw InvalidArgument("integer DCT tables: unsupported version");
      have_version = true;
    } else if (word == "table") {
      if (!have_version) throw InvalidArgument("integer DCT tables: missing version line");
      IntegerDctTable table;
      ls >> table.n;
      if (table.n < 2) throw InvalidArgument("integer DCT tables: bad table size");
      table.rows.resize(table.n, table.n);
      for (int k = 0; k < table.n; ++k) {
        for (int j = 0; j < table.n; ++j) {
          if (!(in >> table.rows(k, j))) throw InvalidArgument("integer DCT tables: truncated table");
        }
      }
      out.insert(std::move(table));
    } else {
      throw InvalidArgument("integer DCT tables: unexpected line '" + line + "'");
    }
  }
  if (!have_version) throw InvalidArgument("integer DCT tables: missing version line");
  return out;
}

IntegerDctTables IntegerDctTables::load(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw InvalidArgument("integer DCT tables: cannot open " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

std::filesystem::path IntegerDctTables::standard_path() {
  if (const char* env = std::getenv("SDCT_DATA_DIR")) return std::filesystem::path(env) / "hevc_int_dct.txt";
  return std::filesystem::path(SDCT_DATA_DIR) / "hevc_int_dct.txt";
}

const IntegerDctTables& IntegerDctTables::standard() {
  static const IntegerDctTables tables = load(standard_path());
  return tables;
}

const IntegerDctTable& IntegerDctTables::at(int n) const {
  auto it = tables_.find(n);
  if (it == tables_.end())
    throw InvalidArgument("integer DCT tables: no table for block size " + std::to_string(n));
  return it->second;
}

void IntegerDctTables::insert(IntegerDctTable table) {
  const int n = table.n;
  tables_[n] = std::move(table);
}

FixedRotation fixed_rotation(const AngleVector& angles) {
  FixedRotation rot;
  const double scale = std::ldexp(1.0, kRotationFracBits);
  for (int j = 0; j < angles.size(); ++j) {
    rot.cosines.push_back(std::llround(std::cos(angles.value(j)) * scale));
    rot.sines.push_back(std::llround(std::sin(angles.value(j)) * scale));
  }
  return rot;
}

VectorXl integer_dct2(const IntegerDctTable& table, std::span<const std::int32_t> samples) {
  check_size(table, samples.size());
  const int n = table.n;
  const int log2n = floor_log2(n);
  const int shift1 = log2n;
  const int shift2 = 12 - kIntegerCoeffFracBits;
  MatrixXl x(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) x(r, c) = samples[static_cast<std::size_t>(r * n + c)];
  MatrixXl y = table.rows * x;
  y = y.unaryExpr([&](std::int64_t v) { return round_shift(v, shift1); });
  MatrixXl z = y * table.rows.transpose();
  VectorXl out(n * n);
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) out(k * n + l) = round_shift(z(k, l), shift2);
  return out;
}

VectorXl integer_idct2(const IntegerDctTable& table, const VectorXl& coeffs) {
  check_size(table, static_cast<std::size_t>(coeffs.size()));
  const int n = table.n;
  const int log2n = floor_log2(n);
  const int shift1 = 7;
  const int shift2 = 5 + log2n + kIntegerCoeffFracBits;
  MatrixXl c(n, n);
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) c(k, l) = coeffs(k * n + l);
  MatrixXl z = table.rows.transpose() * c;
  z = z.unaryExpr([&](std::int64_t v) { return round_shift(v, shift1); });
  MatrixXl x = z * table.rows;
  VectorXl out(n * n);
  for (int r = 0; r < n; ++r)
    for (int col = 0; col < n; ++col) out(r * n + col) = round_shift(x(r, col), shift2);
  return out;
}

VectorXl forward_integer(const AngleVector& angles, std::span<const std::int32_t> samples,
                         const IntegerDctTable& table) {
  if (angles.n() != table.n) throw InvalidArgument("forward_integer: angle vector does not match table");
  VectorXl c = integer_dct2(table, samples);
  if (!angles.is_zero()) rotate_fixed(rotation_pairs(table.n), fixed_rotation(angles), c, false);
  return c;
}

VectorXl inverse_integer(const AngleVector& angles, const VectorXl& coeffs,
                         const IntegerDctTable& table) {
  if (angles.n() != table.n) throw InvalidArgument("inverse_integer: angle vector does not match table");
  VectorXl c = coeffs;
  if (!angles.is_zero()) rotate_fixed(rotation_pairs(table.n), fixed_rotation(angles), c, true);
  return integer_idct2(table, c);
}

}  // namespace sdct
