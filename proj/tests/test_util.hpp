#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "sdct/codec.hpp"

namespace sdct::test {

inline std::filesystem::path data_dir() { return SDCT_TEST_DATA_DIR; }

inline const std::vector<std::string>& corpus_names() {
  static const std::vector<std::string> names{"astronaut", "brick", "camera", "directional"};
  return names;
}

inline Image corpus_image(const std::string& name) { return read_pgm(data_dir() / (name + ".pgm")); }

/// n x n block at (row, col) in raster order.
inline VectorXd block_at(const Image& img, int row, int col, int n) {
  VectorXd x(n * n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) x(r * n + c) = img.at(row + r, col + c);
  return x;
}

/// `count` blocks spread over the corpus on a fixed grid.
inline std::vector<VectorXd> natural_blocks(int n, int count) {
  std::vector<VectorXd> out;
  std::vector<Image> imgs;
  for (const auto& name : corpus_names()) imgs.push_back(corpus_image(name));
  std::mt19937 rng(7);
  while (static_cast<int>(out.size()) < count) {
    const Image& img = imgs[out.size() % imgs.size()];
    std::uniform_int_distribution<int> rr(0, img.height - n), cc(0, img.width - n);
    out.push_back(block_at(img, rr(rng), cc(rng), n));
  }
  return out;
}

inline VectorXd random_block(int n, std::mt19937& rng, double lo = 0.0, double hi = 255.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  VectorXd x(n * n);
  for (auto& v : x) v = u(rng);
  return x;
}

inline AngleVector random_angles(int n, int q, std::mt19937& rng) {
  std::uniform_int_distribution<int> pick(0, q - 1);
  AngleVector a(n, q);
  for (int j = 0; j < a.size(); ++j) a.set_index(j, pick(rng));
  return a;
}

}  // namespace sdct::test
