#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "dikp/degrade.hpp"
#include "dikp/error.hpp"
#include "dikp/pnm.hpp"
#include "harness.hpp"

using namespace dikp;
using namespace dikp::harness;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "dikp_harness_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(read_bytes(p));
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

// Two small synthetic images under `dir`: one gray, one color.
fs::path make_images(const fs::path& dir) {
  Image gray(1, 40, 40), color(3, 40, 40);
  for (std::size_t i = 0; i < 40; ++i)
    for (std::size_t j = 0; j < 40; ++j) {
      gray(0, i, j) = (i / 8 + j / 8) % 2 ? 0.8 : 0.2;
      for (std::size_t c = 0; c < 3; ++c) color(c, i, j) = 0.5 + 0.4 * std::sin(0.2 * double(i + 3 * c) + 0.1 * double(j));
    }
  save_image(gray, dir / "checks.pgm");
  save_image(color, dir / "waves.ppm");
  return dir;
}

std::string s(const fs::path& p) { return p.string(); }

}  // namespace

TEST(KeyValues, ParsesCommentsAndWhitespace) {
  const auto kv = parse_key_values("# header\n a = 1 \nb=x,y # trailing\n\n");
  EXPECT_EQ(kv.size(), 2u);
  EXPECT_EQ(kv.at("a"), "1");
  EXPECT_EQ(kv.at("b"), "x,y");
  EXPECT_THROW(parse_key_values("novalue\n"), ConfigError);
  EXPECT_THROW(parse_key_values(" = 3\n"), ConfigError);
}

TEST(ExperimentConfig, RoundTripsThroughKeyValues) {
  ExperimentConfig a;
  a.apply(parse_key_values("seeds = 4, 5\nsigma = 0.025\nmethods = tv,blind-dikp\nfull = true\nout = x/y\n"));
  EXPECT_EQ(a.seeds, (std::vector<std::uint64_t>{4, 5}));
  EXPECT_EQ(a.sigma, 0.025);
  EXPECT_TRUE(a.full);
  ExperimentConfig b;
  b.apply(parse_key_values(format_key_values(a.to_key_values())));
  EXPECT_EQ(b.to_key_values(), a.to_key_values());
}

TEST(ExperimentConfig, RejectsBadValues) {
  ExperimentConfig c;
  EXPECT_THROW(c.apply({{"nonsense", "1"}}), ConfigError);
  EXPECT_THROW(c.apply({{"sigma", "abc"}}), ConfigError);
  EXPECT_THROW(c.apply({{"crop", "-3"}}), ConfigError);
  c = ExperimentConfig{};
  c.methods = {"wiener"};
  EXPECT_THROW(c.validate(), ConfigError);
  c = ExperimentConfig{};
  c.seeds.clear();
  EXPECT_THROW(c.validate(), ConfigError);
  c = ExperimentConfig{};
  c.kernels = {"box"};
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(ResultRow, SevenColumns) {
  const ResultRow r{"img", "motion", "dikp", 3, std::numeric_limits<double>::infinity(), 0.5, 1.25};
  const auto line = to_csv_line(r);
  EXPECT_EQ(std::count(line.begin(), line.end(), ','), 6);
  EXPECT_EQ(std::count(kResultHeader.begin(), kResultHeader.end(), ','), 6);
  EXPECT_EQ(line, "img,motion,dikp,3,inf,0.5,1.25");
}

TEST(Cli, DegradeDeltaNoiselessKeepsBytes) {
  const auto dir = fresh_dir("degrade_delta");
  make_images(dir);
  ASSERT_EQ(run_cli({"degrade", "--image", s(dir / "checks.pgm"), "--kernel", "delta", "--sigma", "0", "--crop", "32",
                     "--out", s(dir / "o")}),
            0);
  EXPECT_EQ(read_bytes(dir / "o" / "observed.pgm"), read_bytes(dir / "o" / "original.pgm"));
}

TEST(Cli, DegradeIsReproducibleAndReplayable) {
  const auto dir = fresh_dir("degrade_replay");
  make_images(dir);
  const std::vector<std::string> args{"degrade", "--image", s(dir / "waves.ppm"), "--kernel", "motion", "--seed", "9",
                                      "--crop", "32"};
  auto with_out = [&](const fs::path& out) {
    auto a = args;
    a.insert(a.end(), {"--out", s(out)});
    return a;
  };
  ASSERT_EQ(run_cli(with_out(dir / "a")), 0);
  ASSERT_EQ(run_cli(with_out(dir / "b")), 0);
  ASSERT_EQ(run_cli({"replay", s(dir / "a" / "manifest.txt"), "--out", s(dir / "c")}), 0);
  ASSERT_EQ(run_cli({"degrade", "--config", s(dir / "a" / "manifest.txt"), "--out", s(dir / "d")}), 0);
  for (const char* f : {"observed.ppm", "original.ppm", "kernel.csv"})
    for (const char* other : {"b", "c", "d"}) EXPECT_EQ(read_bytes(dir / "a" / f), read_bytes(dir / other / f)) << f;
  const auto back = load_kernel_csv(dir / "a" / "kernel.csv");
  EXPECT_NEAR(back.values()[8], 1.0 / 9.0, 1e-15);
}

TEST(Cli, SolveTvNearIdentityRecovery) {
  const auto dir = fresh_dir("solve_tv");
  make_images(dir);
  ASSERT_EQ(run_cli({"degrade", "--image", s(dir / "checks.pgm"), "--kernel", "delta", "--sigma", "0", "--crop", "32",
                     "--out", s(dir / "d")}),
            0);
  ASSERT_EQ(run_cli({"solve", "--method", "tv", "--observed", s(dir / "d" / "observed.pgm"), "--reference",
                     s(dir / "d" / "original.pgm"), "--kernel-file", s(dir / "d" / "kernel.csv"), "--tv-alpha", "1e-8",
                     "--crop", "32", "--out", s(dir / "s")}),
            0);
  const auto rows = read_csv(dir / "s" / "result.csv");
  ASSERT_EQ(rows.size(), 2u);
  ASSERT_EQ(rows[0].size(), 7u);
  ASSERT_EQ(rows[1].size(), 7u);
  EXPECT_EQ(rows[0][4], "psnr");
  const double p = rows[1][4] == "inf" ? INFINITY : std::stod(rows[1][4]);
  EXPECT_GT(p, 40.0);
  EXPECT_TRUE(fs::exists(dir / "s" / "trace.csv"));
}

TEST(Cli, SolveKernelKnownNeedsKernel) {
  const auto dir = fresh_dir("solve_missing");
  make_images(dir);
  EXPECT_EQ(run_cli({"solve", "--method", "dikp", "--observed", s(dir / "checks.pgm"), "--reference",
                     s(dir / "checks.pgm"), "--crop", "32", "--out", s(dir / "s")}),
            1);
  EXPECT_EQ(run_cli({"solve", "--method", "nope", "--observed", s(dir / "checks.pgm"), "--reference",
                     s(dir / "checks.pgm"), "--out", s(dir / "s")}),
            1);
}

TEST(Cli, SolveBlindDikpEmitsSimplexKernel) {
  const auto dir = fresh_dir("solve_blind");
  make_images(dir);
  ASSERT_EQ(run_cli({"degrade", "--image", s(dir / "checks.pgm"), "--kernel", "motion", "--crop", "32", "--out",
                     s(dir / "d")}),
            0);
  ASSERT_EQ(run_cli({"solve", "--method", "blind-dikp", "--observed", s(dir / "d" / "observed.pgm"), "--reference",
                     s(dir / "d" / "original.pgm"), "--dikp-iters", "5", "--dikp-width", "4", "--dikp-kernel-width",
                     "4", "--crop", "32", "--out", s(dir / "s")}),
            0);
  const auto k = load_kernel_csv(dir / "s" / "kernel.csv");
  EXPECT_NEAR(std::accumulate(k.values().begin(), k.values().end(), 0.0), 1.0, 1e-9);
  ASSERT_EQ(run_cli({"replay", s(dir / "s" / "manifest.txt"), "--out", s(dir / "r")}), 0);
  EXPECT_EQ(read_bytes(dir / "s" / "restored.pgm"), read_bytes(dir / "r" / "restored.pgm"));
  EXPECT_EQ(read_bytes(dir / "s" / "kernel.csv"), read_bytes(dir / "r" / "kernel.csv"));
}

TEST(Cli, TableAverageAndFailureMarking) {
  const auto dir = fresh_dir("table");
  make_images(dir);
  // Crop 40 is not a multiple of 32: the generator cells fail, TV cells run.
  const int code = run_cli({"table", "--image-dir", s(dir), "--images", "checks,waves", "--kernels", "gaussian,motion",
                            "--methods", "tv,dikp", "--seeds", "0,1", "--crop", "40", "--tv-iters", "10", "--out",
                            s(dir / "t")});
  EXPECT_EQ(code, 2);
  const auto table = read_csv(dir / "t" / "table.csv");
  ASSERT_EQ(table.size(), 1u + 2 * 3);
  EXPECT_EQ(table[0], (std::vector<std::string>{"kernel", "method", "checks", "waves", "average"}));
  for (std::size_t r = 1; r < table.size(); ++r) {
    if (table[r][1] == "dikp") {
      EXPECT_EQ(table[r][2], "FAILED");
      EXPECT_EQ(table[r][4], "FAILED");
      continue;
    }
    const double avg = (std::stod(table[r][2]) + std::stod(table[r][3])) / 2.0;
    EXPECT_NEAR(std::stod(table[r][4]), avg, 1e-9);
  }
  const auto failures = read_csv(dir / "t" / "failures.csv");
  EXPECT_EQ(failures.size(), 1u + 2 * 2 * 2);
  const auto results = read_csv(dir / "t" / "results.csv");
  EXPECT_EQ(results.size(), 1u + 8 /* observed */ + 8 /* tv */);
  for (const auto& row : results) EXPECT_EQ(row.size(), 7u);

  // The TV outputs feed the gradient histograms; the generator set is empty.
  EXPECT_EQ(run_cli({"gradhist", "--table-dir", s(dir / "t"), "--out", s(dir / "g")}), 1);
}

TEST(Cli, GradhistFromDirectories) {
  const auto dir = fresh_dir("gradhist");
  make_images(dir);
  ASSERT_EQ(run_cli({"gradhist", "--std-dir", s(dir), "--reg-dir", s(dir), "--dikp-dir", s(dir), "--out",
                     s(dir / "g")}),
            0);
  const auto kl = read_csv(dir / "g" / "kl.csv");
  ASSERT_EQ(kl.size(), 4u);
  EXPECT_EQ(kl[3][0], "std||std");
  EXPECT_EQ(std::stod(kl[3][1]), 0.0);
  EXPECT_EQ(read_csv(dir / "g" / "hist_std.csv").size(), 65u);
}

TEST(Cli, CurvesColumnsAndZoom) {
  const auto dir = fresh_dir("curves");
  make_images(dir);
  ASSERT_EQ(run_cli({"curves", "--image-dir", s(dir), "--images", "checks,waves", "--kernels", "defocus", "--seeds",
                     "2", "--crop", "32", "--curves-iters", "12", "--dikp-width", "4", "--zoom-begin", "5",
                     "--zoom-end", "8", "--out", s(dir / "c")}),
            0);
  const auto csv = read_csv(dir / "c" / "curves_defocus_s2.csv");
  ASSERT_EQ(csv.size(), 13u);
  EXPECT_EQ(csv[0], (std::vector<std::string>{"iter", "checks", "waves", "gaussian_noise", "uniform_noise"}));
  for (std::size_t r = 1; r < csv.size(); ++r) {
    ASSERT_EQ(csv[r].size(), 5u);
    EXPECT_EQ(csv[r][0], std::to_string(r - 1));
    for (std::size_t c = 1; c < 5; ++c) EXPECT_GE(std::stod(csv[r][c]), 0.0);
  }
  const auto zoom = read_csv(dir / "c" / "curves_defocus_s2_zoom.csv");
  ASSERT_EQ(zoom.size(), 5u);
  EXPECT_EQ(zoom[1][0], "5");
  EXPECT_EQ(zoom[4][0], "8");
  EXPECT_EQ(zoom[1], csv[6]);
}
