#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "sdct/codec.hpp"
#include "sdct/eval.hpp"
#include "sdct/selftest.hpp"

namespace sdct::cli {

namespace fs = std::filesystem;

namespace {

// Thrown for semantic flag errors found after parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const std::vector<std::string> kAlgorithms{"dct", "sdct1", "sdct-am", "sdct-bt"};

struct LambdaPolicy {
  std::optional<double> fixed;  // paired when empty
};

LambdaPolicy parse_lambda_policy(const std::string& text) {
  if (text == "paired") return {};
  if (text.rfind("fixed:", 0) == 0) {
    const std::string v = text.substr(6);
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == v.size() && !v.empty() && std::isfinite(value) && value >= 0.0) return {value};
  }
  throw UsageError("--lambda-policy must be 'paired' or 'fixed:VALUE' with VALUE >= 0, got '" + text + "'");
}

struct CodingFlags {
  std::string algorithm = "sdct-am";
  int n = 8;
  std::string lambda_policy = "paired";
  int q_theta = 8;
  bool integer = false;
  int threads = 1;

  // sweep takes lists for the algorithm and block size instead
  void add_to(CLI::App* app, bool single = true) {
    if (single)
      app->add_option("--algorithm,-a", algorithm, "dct | sdct1 | sdct-am | sdct-bt")
          ->check(CLI::IsMember(kAlgorithms))
          ->capture_default_str();
    if (single) app->add_option("--n", n, "block size")->check(CLI::IsMember({8, 16, 32}))->capture_default_str();
    app->add_option("--lambda-policy", lambda_policy, "paired | fixed:VALUE")->capture_default_str();
    app->add_option("--q-theta", q_theta, "angle quantization levels")->check(CLI::Range(2, 255))->capture_default_str();
    app->add_flag("--integer", integer, "integer arithmetic");
    app->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  }

  EncodeParams params(const std::string& alg, double step) const {
    EncodeParams p;
    p.algorithm = parse_algorithm(alg);
    p.n = n;
    p.coeff_step = step;
    p.lambda = parse_lambda_policy(lambda_policy).fixed;
    p.q_theta = q_theta;
    p.arithmetic = integer ? Arithmetic::Integer : Arithmetic::Float;
    p.threads = threads;
    try {
      p.validate();
    } catch (const InvalidArgument& e) {
      throw UsageError(e.what());
    }
    return p;
  }
};

double peak_for(const Image& img) { return img.format == SampleFormat::Gray8 ? 255.0 : 65535.0; }

void print_encode_summary(std::ostream& out, const Image& src, const EncodeResult& enc) {
  const auto& b = enc.blocks;
  const std::size_t dir = static_cast<std::size_t>(std::count_if(b.begin(), b.end(), [](const BlockRecord& r) { return r.directional; }));
  std::size_t payload = 0;
  for (const auto& r : b) payload += static_cast<std::size_t>(r.payload_bits());
  const double share = payload ? 100.0 * static_cast<double>(enc.angle_bits()) / static_cast<double>(payload) : 0.0;
  const double q = psnr(src, enc.reconstruction, peak_for(src));
  out << std::fixed;
  out << "algorithm   " << to_string(enc.header.algorithm) << (enc.header.arithmetic == Arithmetic::Integer ? " (integer)" : "")
      << ", n=" << enc.header.n << ", step=" << std::setprecision(3) << enc.header.coeff_step
      << ", lambda=" << enc.header.lambda << '\n';
  out << "bits        " << enc.total_bits() << '\n';
  out << "bpp         " << std::setprecision(4) << enc.bits_per_pixel(true) << " (" << enc.bits_per_pixel(false)
      << " without header)\n";
  out << "PSNR        " << std::setprecision(3) << q << " dB\n";
  if (src.width >= 11 && src.height >= 11) out << "SSIM        " << std::setprecision(4) << ssim(src, enc.reconstruction) << '\n';
  out << "blocks      " << b.size() << " (directional " << dir << ", DCT " << b.size() - dir << ", "
      << std::setprecision(1) << 100.0 * enc.directional_fraction() << "% directional)\n";
  out << "mean s      " << std::setprecision(2) << enc.mean_subbands() << '\n';
  out << "angle bits  " << enc.angle_bits() << " (" << std::setprecision(1) << share << "% of payload)\n";
}

std::vector<fs::path> collect_corpus(const std::vector<std::string>& inputs) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    std::error_code ec;
    if (fs::is_directory(in, ec)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(in)) {
        const auto ext = e.path().extension().string();
        if (e.is_regular_file() && (ext == ".pgm" || ext == ".res16")) found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.emplace_back(in);
    }
  }
  if (files.empty()) throw IoError("empty corpus: no .pgm or .res16 images found");
  return files;
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

int cmd_encode(const std::string& input, const std::string& output, const std::string& recon, double step,
               const CodingFlags& flags, std::ostream& out) {
  const EncodeParams p = flags.params(flags.algorithm, step);
  const Image img = read_image(input);
  const EncodeResult enc = encode_image(img, p);
  write_file_atomic(output, enc.bitstream);
  if (!recon.empty()) write_image(recon, enc.reconstruction);
  print_encode_summary(out, img, enc);
  return kOk;
}

int cmd_decode(const std::string& input, const std::string& output, std::ostream& out) {
  const auto bytes = read_file(input);
  const DecodeResult dec = decode_image(bytes);
  write_image(output, dec.image);
  out << "decoded " << dec.image.width << 'x' << dec.image.height << " " << to_string(dec.header.algorithm) << " n="
      << dec.header.n << " -> " << output << '\n';
  return kOk;
}

int cmd_analyze(const std::string& input, const std::string& csv, std::ostream& out) {
  const auto bytes = read_file(input);
  const DecodeResult dec = decode_image(bytes);
  const auto& h = dec.header;
  const UsageReport usage = block_usage_report(bytes);
  std::size_t subbands = 0;
  std::size_t payload = 0;
  for (const auto& b : dec.blocks) {
    if (b.directional) subbands += static_cast<std::size_t>(b.subbands);
    payload += static_cast<std::size_t>(b.payload_bits());
  }
  out << std::fixed;
  out << "size        " << h.width << 'x' << h.height << (h.format == SampleFormat::Residual16 ? " residual" : " gray8") << '\n';
  out << "algorithm   " << to_string(h.algorithm) << (h.arithmetic == Arithmetic::Integer ? " (integer)" : "") << '\n';
  out << "n           " << h.n << '\n';
  out << "step        " << std::setprecision(4) << h.coeff_step << '\n';
  out << "lambda      " << h.lambda << '\n';
  out << "q_theta     " << h.q_theta << '\n';
  out << "bytes       " << bytes.size() << '\n';
  out << "blocks      " << usage.blocks << " (directional " << usage.directional << ", " << std::setprecision(1)
      << 100.0 * usage.fraction() << "%)\n";
  out << "mean s      " << std::setprecision(2)
      << (usage.directional ? static_cast<double>(subbands) / static_cast<double>(usage.directional) : 0.0) << '\n';
  out << "payload     " << payload << " bits\n";
  if (!csv.empty()) {
    std::ostringstream s;
    s << "row,col,directional,mode_bits,structure_bits,angle_value_bits,coeff_bits,pad_bits,subbands\n";
    for (const auto& b : dec.blocks)
      s << b.row << ',' << b.col << ',' << b.directional << ',' << b.mode_bits << ',' << b.structure_bits << ','
        << b.angle_value_bits << ',' << b.coeff_bits << ',' << b.pad_bits << ',' << b.subbands << '\n';
    write_text_atomic(csv, s.str());
  }
  return kOk;
}

int cmd_sweep(const std::vector<std::string>& inputs, std::vector<std::string> algorithms, const std::vector<int>& sizes,
              const std::vector<double>& steps, const CodingFlags& flags, const std::string& csv,
              const std::string& bd_csv, const std::string& plot, std::ostream& out) {
  for (double s : steps)
    if (!(s > 0.0) || !std::isfinite(s)) throw UsageError("steps must be positive");
  for (int n : sizes) {
    CodingFlags f = flags;
    f.n = n;
    for (const auto& a : algorithms) (void)f.params(a, steps.front());
  }
  // The DCT curve is the reference for every BD row.
  if (std::find(algorithms.begin(), algorithms.end(), "dct") == algorithms.end()) algorithms.insert(algorithms.begin(), "dct");
  const auto files = collect_corpus(inputs);

  std::vector<RdCurve> curves;
  std::vector<BdRow> rows;
  const bool bd_possible = steps.size() >= 4;
  for (const auto& file : files) {
    const Image img = read_image(file);
    const std::string name = file.stem().string();
    for (int n : sizes) {
      CodingFlags f = flags;
      f.n = n;
      std::map<std::string, std::size_t> at;
      for (const auto& a : algorithms) {
        at[a] = curves.size();
        curves.push_back(rd_sweep(img, f.params(a, steps.front()), steps, name));
      }
      if (!bd_possible) continue;
      for (const auto& a : algorithms) {
        if (a == "dct") continue;
        BdRow r;
        r.image = name;
        r.n = n;
        r.algorithm = parse_algorithm(a);
        r.integer = flags.integer;
        r.bd_psnr_db = bd_psnr(curves[at["dct"]], curves[at[a]]);
        rows.push_back(r);
      }
    }
  }

  if (!csv.empty()) {
    std::ostringstream s;
    write_rd_csv(s, curves);
    write_text_atomic(csv, s.str());
  }
  if (!plot.empty()) {
    std::ostringstream s;
    write_gnuplot(s, curves);
    write_text_atomic(plot, s.str());
    std::ostringstream gp;
    gp << "set xlabel 'bpp'\nset ylabel 'PSNR [dB]'\nset key bottom right\nplot";
    for (std::size_t i = 0; i < curves.size(); ++i)
      gp << (i ? "," : "") << " '" << fs::path(plot).filename().string() << "' index " << i
         << " using 1:2 with linespoints title '" << curves[i].image << ' ' << to_string(curves[i].algorithm) << " n="
         << curves[i].n << "'";
    gp << '\n';
    write_text_atomic(plot + ".gp", gp.str());
  }

  out << std::fixed << std::setprecision(3);
  out << curves.size() << " curves over " << files.size() << " image(s)\n";
  if (!bd_possible) {
    out << "BD-PSNR skipped: needs at least 4 steps\n";
    return kOk;
  }
  // Table: one line per image, one column per (n, algorithm).
  std::vector<std::pair<int, Algorithm>> cols;
  for (int n : sizes)
    for (const auto& a : algorithms)
      if (a != "dct") cols.emplace_back(n, parse_algorithm(a));
  out << "BD-PSNR vs DCT [dB]\n" << std::left << std::setw(14) << "image";
  for (const auto& [n, a] : cols) out << std::right << std::setw(14) << (to_string(a) + "/" + std::to_string(n));
  out << '\n';
  std::vector<double> sum(cols.size(), 0.0);
  for (const auto& file : files) {
    const std::string name = file.stem().string();
    out << std::left << std::setw(14) << name;
    for (std::size_t c = 0; c < cols.size(); ++c)
      for (const auto& r : rows)
        if (r.image == name && r.n == cols[c].first && r.algorithm == cols[c].second) {
          out << std::right << std::setw(14) << r.bd_psnr_db;
          sum[c] += r.bd_psnr_db;
        }
    out << '\n';
  }
  if (files.size() > 1) {
    out << std::left << std::setw(14) << "mean";
    for (double s : sum) out << std::right << std::setw(14) << s / static_cast<double>(files.size());
    out << '\n';
  }
  if (!bd_csv.empty()) {
    std::ostringstream s;
    write_bd_csv(s, rows);
    write_text_atomic(bd_csv, s.str());
  }
  return kOk;
}

int cmd_selftest(const std::string& table_path, std::ostream& out) {
  SelftestOptions o;
  if (!table_path.empty() && !fs::is_regular_file(table_path)) throw IoError("cannot open " + table_path);
  if (!table_path.empty()) o.integer_tables = IntegerDctTables::load(table_path);
  return report_selftest(run_selftest(o), out) ? kOk : kInvariant;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Steerable DCT image codec"};
  app.name(args.empty() ? "sdct" : fs::path(args.front()).filename().string());
  app.require_subcommand(1);

  std::string input, output, recon, csv, bd_csv, plot, table;
  double step = 16.0;
  std::vector<double> steps;
  std::vector<std::string> inputs;
  std::vector<std::string> algorithms{"dct", "sdct-am", "sdct-bt"};
  std::vector<int> sizes{8};
  CodingFlags flags;

  auto* enc = app.add_subcommand("encode", "encode an image to a bitstream");
  enc->add_option("input", input, "PGM or SDR16 residual plane")->required();
  enc->add_option("-o,--output", output, "bitstream path")->required();
  enc->add_option("--step", step, "coefficient quantization step")->check(CLI::PositiveNumber)->capture_default_str();
  enc->add_option("--recon", recon, "also write the reconstruction");
  flags.add_to(enc);

  auto* dec = app.add_subcommand("decode", "decode a bitstream");
  dec->add_option("input", input, "bitstream")->required();
  dec->add_option("-o,--output", output, "image path")->required();

  auto* ana = app.add_subcommand("analyze", "print header and block statistics of a bitstream");
  ana->add_option("input", input, "bitstream")->required();
  ana->add_option("--csv", csv, "per-block records");

  auto* swp = app.add_subcommand("sweep", "RD curves and BD-PSNR against the DCT");
  swp->add_option("inputs", inputs, "images or directories")->required();
  swp->add_option("--algorithm,-a", algorithms, "comma separated")->delimiter(',')->check(CLI::IsMember(kAlgorithms));
  swp->add_option("--n", sizes, "comma separated block sizes")->delimiter(',')->check(CLI::IsMember({8, 16, 32}));
  auto* one = swp->add_option("--step", step, "single step");
  auto* many = swp->add_option("--steps", steps, "comma separated steps")->delimiter(',');
  one->excludes(many);
  many->excludes(one);
  swp->add_option("--csv", csv, "RD points");
  swp->add_option("--bd-csv", bd_csv, "BD rows");
  swp->add_option("--plot", plot, "gnuplot data; a script is written next to it");
  flags.add_to(swp, false);

  auto* self = app.add_subcommand("selftest", "run the invariant suites");
  self->add_option("--int-table", table, "integer DCT table file to check instead of the shipped one");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  if (argv.empty()) argv.push_back("sdct");
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*enc) {
      parse_lambda_policy(flags.lambda_policy);
      return cmd_encode(input, output, recon, step, flags, out);
    }
    if (*dec) return cmd_decode(input, output, out);
    if (*ana) return cmd_analyze(input, csv, out);
    if (*swp) {
      parse_lambda_policy(flags.lambda_policy);
      if (steps.empty()) steps = {step};
      return cmd_sweep(inputs, algorithms, sizes, steps, flags, csv, bd_csv, plot, out);
    }
    if (*self) return cmd_selftest(table, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n' << app.help();
    return kUsage;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << '\n';
    return kFormat;
  } catch (const InvalidArgument& e) {
    err << "invalid input: " << e.what() << '\n';
    return kFormat;
  }
  return kUsage;
}

}  // namespace sdct::cli
