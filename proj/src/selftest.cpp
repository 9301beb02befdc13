#include "sdct/selftest.hpp"

#include <cmath>
#include <functional>
#include <ostream>
#include <random>
#include <sstream>

#include "sdct/codec.hpp"
#include "sdct/optimizer_am.hpp"
#include "sdct/optimizer_bt.hpp"

namespace sdct {

namespace {

AngleVector random_angles(int n, int q, std::mt19937& rng) {
  std::uniform_int_distribution<int> pick(0, q - 1);
  AngleVector a(n, q);
  for (int j = 0; j < a.size(); ++j) a.set_index(j, pick(rng));
  return a;
}

VectorXd random_block(int n, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(0.0, 255.0);
  VectorXd x(n * n);
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = u(rng);
  return x;
}

SuiteResult suite(const std::string& name, const std::function<std::string()>& body) {
  SuiteResult r;
  r.name = name;
  try {
    r.detail = body();
    r.passed = r.detail.rfind("FAIL", 0) != 0;
  } catch (const std::exception& e) {
    r.detail = std::string("FAIL exception: ") + e.what();
  }
  return r;
}

std::string fmt(const char* label, double v) {
  std::ostringstream s;
  s << label << ' ' << v;
  return s.str();
}

// Random subband tree over p positions.
SubbandTree random_tree(int p, std::mt19937& rng) {
  SubbandTree t(p);
  std::bernoulli_distribution split(0.5);
  std::vector<int> open{0};
  while (!open.empty()) {
    const int id = open.back();
    open.pop_back();
    if (t.can_split(id) && split(rng)) {
      t.split(id, 0, 0);
      open.push_back(t.node(id).left);
      open.push_back(t.node(id).right);
    }
  }
  return t;
}

}  // namespace

std::vector<SuiteResult> run_selftest(const SelftestOptions& o) {
  std::mt19937 rng(o.seed);
  const int q = 8;
  std::vector<SuiteResult> out;

  out.push_back(suite("orthogonality", [&] {
    double worst = 0.0;
    for (int n : {4, 8})
      for (int t = 0; t < o.trials; ++t) {
        const MatrixXd V = SdctBasis<double>(random_angles(n, q, rng)).dense();
        worst = std::max(worst, (V.transpose() * V - MatrixXd::Identity(n * n, n * n)).cwiseAbs().maxCoeff());
      }
    return worst <= 1e-10 ? fmt("max |V'V - I|", worst) : fmt("FAIL max |V'V - I|", worst);
  }));

  out.push_back(suite("eigen-consistency", [&] {
    double worst = 0.0;
    for (int n : {4, 8}) {
      const MatrixXd L = grid_laplacian(n).cast<double>();
      const EigenTable table = eigen_pair_table(n);
      for (int t = 0; t < o.trials / 5 + 1; ++t) {
        const MatrixXd V = SdctBasis<double>(random_angles(n, q, rng)).dense();
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) {
            const auto v = V.col(k * n + l);
            worst = std::max(worst, (L * v - table.eigenvalue(k, l) * v).cwiseAbs().maxCoeff());
          }
      }
    }
    return worst <= 1e-8 ? fmt("max residual", worst) : fmt("FAIL max residual", worst);
  }));

  out.push_back(suite("transform-round-trip", [&] {
    double worst = 0.0;
    for (int n : {4, 8, 16})
      for (int t = 0; t < o.trials; ++t) {
        const SdctBasis<double> b(random_angles(n, q, rng));
        const VectorXd x = random_block(n, rng);
        worst = std::max(worst, (b.inverse(b.forward(x)) - x).cwiseAbs().maxCoeff());
      }
    return worst <= 1e-9 ? fmt("max error", worst) : fmt("FAIL max error", worst);
  }));

  out.push_back(suite("am-monotonicity", [&] {
    int bad = 0;
    for (int t = 0; t < o.trials; ++t) {
      const int n = t % 2 ? 8 : 4;
      const VectorXd d = dct2(build_dct_1d<double>(n), random_block(n, rng));
      RdParams p;
      p.coeff_step = 16.0;
      p.lambda = 20.0;
      p.alpha = estimate_alpha_from_dct(d, p.coeff_step);
      const AmState st = run_sdct_am_from_dct(d, p, random_angles(n, q, rng));
      for (std::size_t i = 1; i < st.history.size(); ++i) bad += st.history[i].J > st.history[i - 1].J;
      bad += st.cap_reached;
    }
    return bad == 0 ? std::string("J nonincreasing in every run") : fmt("FAIL violations", bad);
  }));

  out.push_back(suite("tree-serializer", [&] {
    int bad = 0;
    int trees = 0;
    for (int p = 1; p <= 8; ++p)
      for (int t = 0; t < 64; ++t) {
        const SubbandTree tree = random_tree(p, rng);
        const auto bits = serialize_tree(tree);
        bad += !(deserialize_tree(bits, p) == tree) || static_cast<int>(bits.size()) != 2 * tree.num_leaves() - 1;
        ++trees;
      }
    for (int p : {28, 120, 496})
      for (int t = 0; t < o.trials; ++t) {
        const SubbandTree tree = random_tree(p, rng);
        const auto bits = serialize_tree(tree);
        bad += !(deserialize_tree(bits, p) == tree) || static_cast<int>(bits.size()) != 2 * tree.num_leaves() - 1;
        ++trees;
      }
    return bad == 0 ? fmt("round trips", trees) : fmt("FAIL mismatches", bad);
  }));

  out.push_back(suite("integer-transform", [&] {
    const IntegerDctTables& tables = o.integer_tables ? *o.integer_tables : IntegerDctTables::standard();
    std::ostringstream msg;
    bool ok = true;
    for (int n : {8, 16, 32}) {
      const IntegerDctTable& t = tables.at(n);
      // Near-orthogonality: rows are scaled DCT eigenvectors.
      const MatrixXd R = t.rows.cast<double>() / (64.0 * std::sqrt(double(n)));
      const double gram = (R * R.transpose() - MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
      std::int64_t worst = 0;
      for (int trial = 0; trial < o.trials / 5 + 1; ++trial) {
        std::uniform_int_distribution<int> u(0, 255);
        std::vector<std::int32_t> x(static_cast<std::size_t>(n) * n);
        for (auto& v : x) v = u(rng);
        const AngleVector a = random_angles(n, q, rng);
        const VectorXl back = inverse_integer(a, forward_integer(a, x, t), t);
        for (std::size_t i = 0; i < x.size(); ++i)
          worst = std::max<std::int64_t>(worst, std::abs(back(static_cast<Eigen::Index>(i)) - x[i]));
      }
      msg << "n=" << n << " gram " << gram << " round-trip " << worst << "; ";
      ok = ok && gram < 0.01 && worst <= 2;
    }
    return (ok ? "" : "FAIL ") + msg.str();
  }));

  out.push_back(suite("codec-round-trip", [&] {
    Image img(40, 24);
    std::uniform_int_distribution<int> noise(-20, 20);
    for (int r = 0; r < img.height; ++r)
      for (int c = 0; c < img.width; ++c)
        img.at(r, c) = std::clamp(128 + static_cast<int>(80 * std::sin(0.4 * r + 0.7 * c)) + noise(rng), 0, 255);
    int bad = 0;
    for (auto alg : {Algorithm::Dct, Algorithm::Sdct1, Algorithm::SdctAm, Algorithm::SdctBt})
      for (auto ar : {Arithmetic::Float, Arithmetic::Integer}) {
        EncodeParams p;
        p.algorithm = alg;
        p.arithmetic = ar;
        p.coeff_step = 12.0;
        const EncodeResult enc = encode_image(img, p);
        bad += !(decode_image(enc.bitstream).image == enc.reconstruction);
      }
    return bad == 0 ? std::string("8 configurations bit-exact") : fmt("FAIL mismatches", bad);
  }));

  return out;
}

bool report_selftest(const std::vector<SuiteResult>& results, std::ostream& out) {
  bool all = true;
  for (const auto& r : results) {
    out << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
    all = all && r.passed;
  }
  return all;
}

}  // namespace sdct
