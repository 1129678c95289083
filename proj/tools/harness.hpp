#pragma once

// Experiment driver behind the `dikp` command line tool.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dikp/baseline.hpp"
#include "dikp/degrade.hpp"
#include "dikp/dikp.hpp"
#include "dikp/image.hpp"

namespace dikp::harness {

enum class Method { Tv, BlindTv, Dikp, BlindDikp };

std::string_view to_string(Method m);
/// "tv", "blind-tv", "dikp", "blind-dikp"; throws ConfigError otherwise.
Method parse_method(std::string_view name);
bool is_blind(Method m);

/// Ordered key/value pairs; the on-disk config and manifest format is one
/// `key = value` per line, `#` starts a comment.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(std::string_view text);
KeyValues read_key_values(const std::filesystem::path& path);
std::string format_key_values(const KeyValues& kv);

struct NamedImage {
  std::string name;
  std::filesystem::path path;
};

struct ExperimentConfig {
  // Inputs.
  std::vector<std::string> images{"cameraman", "house", "lena", "boat", "house_c", "peppers"};
  std::filesystem::path image_dir = "data";
  std::filesystem::path image;      // degrade input
  std::filesystem::path observed;   // solve input
  std::filesystem::path reference;  // solve ground truth
  std::filesystem::path kernel_file;

  // Degradation.
  std::vector<std::string> kernels{"gaussian", "defocus", "motion"};
  std::string kernel = "gaussian";  // degrade: a kernel kind or "delta"
  std::size_t kernel_size = 9;
  double sigma = 0.01;
  std::size_t crop = 64;  // 0: largest multiple of 32 that fits
  bool full = false;      // full-resolution inputs and width-128 generators

  // Runs.
  std::string method = "dikp";
  std::vector<std::string> methods{"tv", "dikp"};
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::size_t jobs = 1;
  std::filesystem::path out = "out";

  // Total-variation baselines.
  double tv_alpha = 2e-2;
  std::size_t tv_iters = 100;
  std::size_t tv_prox_iters = 20;
  double blind_alpha = 2e-3;
  double blind_beta = 5.0;
  std::size_t blind_outer = 20;
  std::size_t blind_inner_x = 100;
  std::size_t blind_inner_k = 200;

  // Generator fitting.
  std::size_t dikp_iters = 1000;
  std::size_t dikp_width = 16;
  std::size_t dikp_kernel_width = 16;
  double dikp_lr = 0.01;
  double perturb_sigma = 0.03;
  double input_noise = 0.1;
  std::size_t track_every = 1;

  // Convergence curves.
  std::size_t curves_iters = 300;
  std::size_t zoom_begin = 80;
  std::size_t zoom_end = 200;

  // Gradient histograms.
  std::filesystem::path table_dir;
  std::filesystem::path std_dir;
  std::filesystem::path reg_dir;
  std::filesystem::path dikp_dir;

  /// Throws ConfigError on an unknown key or an unparsable value.
  void apply(const KeyValues& kv);
  KeyValues to_key_values() const;
  void validate() const;

  std::vector<NamedImage> resolve_images() const;
  baseline::BaselineConfig tv_config() const;
  baseline::BaselineConfig blind_tv_config() const;
  /// Generator settings for an observation of the given shape.
  DikpConfig dikp_config(std::size_t channels, std::size_t rows, std::size_t cols,
                         std::uint64_t seed) const;
  /// Kernel named `kind` ("delta" or a kernel kind) at kernel_size.
  Kernel make_named_kernel(std::string_view kind) const;
  /// Applies the crop rule.
  Image prepare(const Image& img) const;
};

struct ResultRow {
  std::string image;
  std::string kernel;
  std::string method;
  std::uint64_t seed = 0;
  double psnr = 0.0;
  double energy_final = 0.0;
  double wall_seconds = 0.0;
};

inline constexpr std::string_view kResultHeader =
    "image,kernel,method,seed,psnr,energy_final,wall_seconds";
std::string to_csv_line(const ResultRow& row);
/// Exact decimal form used in every CSV ("inf" for the PSNR sentinel).
std::string format_number(double v);

struct SolveOutcome {
  Image image;
  std::optional<Kernel> kernel;
  double energy_final = 0.0;
  std::string trace_csv;
  double seconds = 0.0;
};

/// `known` is required for the kernel-known methods and ignored otherwise.
SolveOutcome run_method(Method m, const Image& observed, const std::optional<Kernel>& known,
                        const ExperimentConfig& cfg, std::uint64_t seed);

struct GridFailure {
  std::string image, kernel, method;
  std::uint64_t seed = 0;
  std::string error;
};

struct GridResult {
  std::vector<ResultRow> rows;
  std::vector<GridFailure> failures;
  std::vector<ResultRow> observed;  // PSNR of each observation, method "observed"
};

/// Runs image x kernel x method x seed and writes everything under cfg.out.
GridResult run_grid(const ExperimentConfig& cfg);

/// Rows kernel x method (with an "observed" row per kernel), one column per
/// image plus "average"; cells hold the mean (or sample standard deviation)
/// over seeds, or FAILED.
std::string format_table(const GridResult& grid, const std::vector<std::string>& images,
                         const std::vector<std::string>& kernels,
                         const std::vector<std::string>& methods, bool std_dev);

/// Entry point shared by the executable and the tests. Returns the process
/// exit code: 0 on success, 1 on error, 2 when grid cells failed.
int run_cli(int argc, const char* const* argv);
int run_cli(const std::vector<std::string>& args);

}  // namespace dikp::harness
