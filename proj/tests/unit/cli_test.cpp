#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "cli.hpp"
#include "sdct/codec.hpp"
#include "sdct/integer_transform.hpp"
#include "test_util.hpp"

namespace sdct {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "sdct");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("sdct_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    // small crop keeps the tests quick
    const Image full = test::corpus_image("camera");
    Image crop(64, 48);
    for (int r = 0; r < 48; ++r)
      for (int c = 0; c < 64; ++c) crop.at(r, c) = full.at(100 + r, 90 + c);
    write_pgm(dir_ / "img.pgm", crop);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST_F(Cli, EncodeDecodeRoundTrip) {
  const Outcome e = run({"encode", path("img.pgm"), "-o", path("a.sdc"), "--recon", path("rec.pgm")});
  ASSERT_EQ(e.code, cli::kOk) << e.err;
  for (const char* field : {"bits", "bpp", "PSNR", "SSIM", "directional", "mean s", "angle bits"})
    EXPECT_NE(e.out.find(field), std::string::npos) << field;
  const Outcome d = run({"decode", path("a.sdc"), "-o", path("dec.pgm")});
  ASSERT_EQ(d.code, cli::kOk) << d.err;
  EXPECT_EQ(read_pgm(path("dec.pgm")), read_pgm(path("rec.pgm")));
}

TEST_F(Cli, AmSixteenReportsSubbandsAndAngleShare) {
  const Outcome e = run({"encode", path("img.pgm"), "-o", path("a.sdc"), "--algorithm", "sdct-am", "--n", "16"});
  ASSERT_EQ(e.code, cli::kOk) << e.err;
  EXPECT_NE(e.out.find("mean s"), std::string::npos);
  EXPECT_NE(e.out.find("% of payload"), std::string::npos);
  EXPECT_NE(e.out.find("n=16"), std::string::npos);
}

TEST_F(Cli, FlagsReachTheHeader) {
  ASSERT_EQ(run({"encode", path("img.pgm"), "-o", path("a.sdc"), "--algorithm", "sdct-bt", "--n", "32", "--step", "9.5",
                 "--lambda-policy", "fixed:4.5", "--q-theta", "16", "--integer", "--threads", "2"})
                .code,
            cli::kOk);
  const auto h = BitstreamHeader::parse(read_file(path("a.sdc")));
  EXPECT_EQ(h.algorithm, Algorithm::SdctBt);
  EXPECT_EQ(h.n, 32);
  EXPECT_DOUBLE_EQ(h.coeff_step, 9.5);
  EXPECT_DOUBLE_EQ(h.lambda, 4.5);
  EXPECT_EQ(h.q_theta, 16);
  EXPECT_EQ(h.arithmetic, Arithmetic::Integer);
  // decode needs no flags
  EXPECT_EQ(run({"decode", path("a.sdc"), "-o", path("d.pgm")}).code, cli::kOk);
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run({"encode", path("img.pgm"), "-o", path("a.sdc"), "--n", "12"}).code, cli::kUsage);
  EXPECT_EQ(run({"encode", path("img.pgm"), "-o", path("a.sdc"), "--algorithm", "wavelet"}).code, cli::kUsage);
  EXPECT_EQ(run({"encode", path("img.pgm"), "-o", path("a.sdc"), "--lambda-policy", "fixed:-2"}).code, cli::kUsage);
  EXPECT_EQ(run({"encode", path("img.pgm"), "-o", path("a.sdc"), "--lambda-policy", "sometimes"}).code, cli::kUsage);
  EXPECT_EQ(run({"encode", path("img.pgm"), "-o", path("a.sdc"), "--step", "0"}).code, cli::kUsage);
  EXPECT_EQ(run({"encode", path("img.pgm")}).code, cli::kUsage);
  EXPECT_EQ(run({}).code, cli::kUsage);
  EXPECT_EQ(run({"frobnicate"}).code, cli::kUsage);
  EXPECT_EQ(run({"sweep", path("img.pgm"), "--step", "8", "--steps", "8,16"}).code, cli::kUsage);
  // validation happens before any output is written
  EXPECT_FALSE(fs::exists(path("a.sdc")));
  EXPECT_EQ(run({"--help"}).code, cli::kOk);
}

TEST_F(Cli, IoAndFormatErrors) {
  EXPECT_EQ(run({"encode", path("missing.pgm"), "-o", path("a.sdc")}).code, cli::kIo);
  EXPECT_EQ(run({"decode", path("missing.sdc"), "-o", path("x.pgm")}).code, cli::kIo);
  EXPECT_EQ(run({"decode", path("img.pgm"), "-o", path("x.pgm")}).code, cli::kFormat);
  EXPECT_EQ(run({"encode", path("img.pgm"), "-o", path("no/such/dir/a.sdc")}).code, cli::kIo);
  ASSERT_EQ(run({"encode", path("img.pgm"), "-o", path("a.sdc")}).code, cli::kOk);
  auto bytes = read_file(path("a.sdc"));
  bytes.resize(bytes.size() / 2);
  write_file_atomic(path("cut.sdc"), bytes);
  const Outcome r = run({"decode", path("cut.sdc"), "-o", path("x.pgm")});
  EXPECT_EQ(r.code, cli::kFormat);
  EXPECT_NE(r.err.find("format error"), std::string::npos);
  EXPECT_EQ(run({"sweep", path("empty_dir_missing")}).code, cli::kIo);
  fs::create_directories(path("empty"));
  EXPECT_EQ(run({"sweep", path("empty")}).code, cli::kIo);
}

TEST_F(Cli, Analyze) {
  ASSERT_EQ(run({"encode", path("img.pgm"), "-o", path("a.sdc"), "--algorithm", "sdct-am"}).code, cli::kOk);
  const Outcome a = run({"analyze", path("a.sdc"), "--csv", path("blocks.csv")});
  ASSERT_EQ(a.code, cli::kOk) << a.err;
  EXPECT_NE(a.out.find("sdct-am"), std::string::npos);
  EXPECT_NE(a.out.find("blocks      48"), std::string::npos);
  std::ifstream f(path("blocks.csv"));
  int lines = 0;
  for (std::string l; std::getline(f, l);) ++lines;
  EXPECT_EQ(lines, 49);
}

TEST_F(Cli, SweepTwoAlgorithmsOneImage) {
  const Outcome s = run({"sweep", path("img.pgm"), "--algorithm", "dct,sdct-am", "--steps", "10,20,40,80", "--csv",
                     path("rd.csv"), "--bd-csv", path("bd.csv"), "--plot", path("rd.dat")});
  ASSERT_EQ(s.code, cli::kOk) << s.err;
  EXPECT_NE(s.out.find("2 curves"), std::string::npos);
  std::ifstream rd(path("rd.csv"));
  int rows = 0;
  for (std::string l; std::getline(rd, l);) ++rows;
  EXPECT_EQ(rows, 1 + 2 * 4);
  std::ifstream bd(path("bd.csv"));
  rows = 0;
  for (std::string l; std::getline(bd, l);) ++rows;
  EXPECT_EQ(rows, 1 + 1);
  EXPECT_TRUE(fs::exists(path("rd.dat")));
  EXPECT_TRUE(fs::exists(path("rd.dat.gp")));
}

TEST_F(Cli, SweepTableShape) {
  fs::create_directories(path("corpus"));
  fs::copy_file(path("img.pgm"), path("corpus/one.pgm"));
  fs::copy_file(path("img.pgm"), path("corpus/two.pgm"));
  const Outcome s = run({"sweep", path("corpus"), "--algorithm", "sdct-am,sdct-bt", "--n", "8,16", "--steps",
                     "12,24,48,96"});
  ASSERT_EQ(s.code, cli::kOk) << s.err;
  EXPECT_NE(s.out.find("sdct-am/8"), std::string::npos);
  EXPECT_NE(s.out.find("sdct-bt/16"), std::string::npos);
  EXPECT_NE(s.out.find("\none"), std::string::npos);
  EXPECT_NE(s.out.find("\nmean"), std::string::npos);
  EXPECT_NE(s.out.find("12 curves"), std::string::npos);
}

TEST_F(Cli, SweepWithTooFewStepsSkipsBd) {
  const Outcome s = run({"sweep", path("img.pgm"), "--algorithm", "sdct1", "--step", "20"});
  ASSERT_EQ(s.code, cli::kOk) << s.err;
  EXPECT_NE(s.out.find("BD-PSNR skipped"), std::string::npos);
}

TEST_F(Cli, SelftestPassesQuickly) {
  const auto t0 = std::chrono::steady_clock::now();
  const Outcome s = run({"selftest"});
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_EQ(s.code, cli::kOk) << s.out;
  for (const char* suite : {"orthogonality", "eigen-consistency", "round-trip", "am-monotonicity", "tree-serializer"})
    EXPECT_NE(s.out.find(suite), std::string::npos) << suite;
  EXPECT_EQ(s.out.find("FAIL"), std::string::npos);
  EXPECT_LT(secs, 60.0);
}

TEST_F(Cli, SelftestCatchesCorruptedIntegerTable) {
  std::ifstream in(IntegerDctTables::standard_path());
  std::stringstream text;
  text << in.rdbuf();
  std::string s = text.str();
  // flip one coefficient of the 8-point table: "table 8" then row 0, row 1 ...
  const auto pos = s.find("table 8");
  ASSERT_NE(pos, std::string::npos);
  const auto row1 = s.find('\n', s.find('\n', pos) + 1) + 1;
  const auto num_end = s.find(' ', row1);
  s.replace(row1, num_end - row1, "71");
  {
    std::ofstream out(path("bad_table.txt"));
    out << s;
  }
  const Outcome r = run({"selftest", "--int-table", path("bad_table.txt")});
  EXPECT_EQ(r.code, cli::kInvariant) << r.out;
  EXPECT_NE(r.out.find("FAIL integer-transform"), std::string::npos);
  EXPECT_EQ(run({"selftest", "--int-table", path("none.txt")}).code, cli::kIo);
}

}  // namespace
}  // namespace sdct
