#include "harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "dikp/error.hpp"
#include "dikp/metrics.hpp"
#include "dikp/pnm.hpp"

namespace fs = std::filesystem;

namespace dikp::harness {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::Tv: return "tv";
    case Method::BlindTv: return "blind-tv";
    case Method::Dikp: return "dikp";
    case Method::BlindDikp: return "blind-dikp";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::Tv, Method::BlindTv, Method::Dikp, Method::BlindDikp})
    if (name == to_string(m)) return m;
  throw ConfigError("unknown method '" + std::string(name) + "'");
}

bool is_blind(Method m) { return m == Method::BlindTv || m == Method::BlindDikp; }

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto piece = trim(s.substr(start, comma == std::string_view::npos ? s.size() - start : comma - start));
    if (!piece.empty()) out.push_back(piece);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
  return s;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw ConfigError("bad value for " + key + ": '" + text + "'");
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError("bad value for " + key + ": '" + text + "'");
}

struct Field {
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};

std::map<std::string, Field> fields(ExperimentConfig& c) {
  std::map<std::string, Field> f;
  auto size = [&f](const std::string& k, std::size_t& v) {
    f[k] = {[&v, k](const std::string& s) { v = parse_number<std::size_t>(k, s); },
            [&v] { return std::to_string(v); }};
  };
  auto real = [&f](const std::string& k, double& v) {
    f[k] = {[&v, k](const std::string& s) { v = parse_number<double>(k, s); },
            [&v] { return format_number(v); }};
  };
  auto path = [&f](const std::string& k, fs::path& v) {
    f[k] = {[&v](const std::string& s) { v = s; }, [&v] { return v.string(); }};
  };
  auto text = [&f](const std::string& k, std::string& v) {
    f[k] = {[&v](const std::string& s) { v = s; }, [&v] { return v; }};
  };
  auto list = [&f](const std::string& k, std::vector<std::string>& v) {
    f[k] = {[&v](const std::string& s) { v = split_list(s); }, [&v] { return join(v); }};
  };

  list("images", c.images);
  path("image_dir", c.image_dir);
  path("image", c.image);
  path("observed", c.observed);
  path("reference", c.reference);
  path("kernel_file", c.kernel_file);
  list("kernels", c.kernels);
  text("kernel", c.kernel);
  size("kernel_size", c.kernel_size);
  real("sigma", c.sigma);
  size("crop", c.crop);
  f["full"] = {[&c](const std::string& s) { c.full = parse_bool("full", s); },
               [&c] { return std::string(c.full ? "true" : "false"); }};
  text("method", c.method);
  list("methods", c.methods);
  f["seed"] = {[&c](const std::string& s) { c.seed = parse_number<std::uint64_t>("seed", s); },
               [&c] { return std::to_string(c.seed); }};
  f["seeds"] = {[&c](const std::string& s) {
                  c.seeds.clear();
                  for (const auto& p : split_list(s)) c.seeds.push_back(parse_number<std::uint64_t>("seeds", p));
                },
                [&c] {
                  std::vector<std::string> v;
                  for (auto s : c.seeds) v.push_back(std::to_string(s));
                  return join(v);
                }};
  size("jobs", c.jobs);
  path("out", c.out);
  real("tv_alpha", c.tv_alpha);
  size("tv_iters", c.tv_iters);
  size("tv_prox_iters", c.tv_prox_iters);
  real("blind_alpha", c.blind_alpha);
  real("blind_beta", c.blind_beta);
  size("blind_outer", c.blind_outer);
  size("blind_inner_x", c.blind_inner_x);
  size("blind_inner_k", c.blind_inner_k);
  size("dikp_iters", c.dikp_iters);
  size("dikp_width", c.dikp_width);
  size("dikp_kernel_width", c.dikp_kernel_width);
  real("dikp_lr", c.dikp_lr);
  real("perturb_sigma", c.perturb_sigma);
  real("input_noise", c.input_noise);
  size("track_every", c.track_every);
  size("curves_iters", c.curves_iters);
  size("zoom_begin", c.zoom_begin);
  size("zoom_end", c.zoom_end);
  path("table_dir", c.table_dir);
  path("std_dir", c.std_dir);
  path("reg_dir", c.reg_dir);
  path("dikp_dir", c.dikp_dir);
  return f;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_text(const fs::path& p, const std::string& s) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << s;
  if (!out) throw IoError("cannot write " + p.string());
}

void save_image_to(const Image& img, const fs::path& p) {
  fs::create_directories(p.parent_path());
  save_image(img, p);
}

void save_kernel_to(const Kernel& k, const fs::path& p) {
  fs::create_directories(p.parent_path());
  save_kernel_csv(k, p);
}

std::string image_ext(const Image& img) { return img.channels() == 1 ? ".pgm" : ".ppm"; }

Image to_gray(const Image& img) {
  if (img.channels() == 1) return img;
  Image g(1, img.rows(), img.cols());
  for (std::size_t i = 0; i < img.rows(); ++i)
    for (std::size_t j = 0; j < img.cols(); ++j)
      g(0, i, j) = 0.299 * img(0, i, j) + 0.587 * img(1, i, j) + 0.114 * img(2, i, j);
  return g;
}

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::mutex g_log_mutex;

template <class... Args>
void log_line(const Args&... args) {
  std::lock_guard lock(g_log_mutex);
  (std::cerr << ... << args) << '\n';
}

}  // namespace

KeyValues parse_key_values(std::string_view text) {
  KeyValues kv;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const auto key = trim(std::string_view(body).substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    kv[key] = trim(std::string_view(body).substr(eq + 1));
  }
  return kv;
}

KeyValues read_key_values(const fs::path& path) { return parse_key_values(read_text(path)); }

std::string format_key_values(const KeyValues& kv) {
  std::string s;
  for (const auto& [k, v] : kv) s += k + " = " + v + "\n";
  return s;
}

void ExperimentConfig::apply(const KeyValues& kv) {
  auto f = fields(*this);
  for (const auto& [k, v] : kv) {
    const auto it = f.find(k);
    if (it == f.end()) throw ConfigError("unknown config key '" + k + "'");
    it->second.set(v);
  }
}

KeyValues ExperimentConfig::to_key_values() const {
  KeyValues kv;
  for (auto& [k, field] : fields(const_cast<ExperimentConfig&>(*this))) kv[k] = field.get();
  return kv;
}

void ExperimentConfig::validate() const {
  if (images.empty()) throw ConfigError("images must not be empty");
  if (kernels.empty()) throw ConfigError("kernels must not be empty");
  if (seeds.empty()) throw ConfigError("seeds must not be empty");
  if (methods.empty()) throw ConfigError("methods must not be empty");
  for (const auto& k : kernels) parse_kernel_kind(k);
  for (const auto& m : methods) parse_method(m);
  parse_method(method);
  if (kernel != "delta") parse_kernel_kind(kernel);
  if (kernel_size == 0 || kernel_size % 2 == 0) throw ConfigError("kernel_size must be odd");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("sigma must be nonnegative");
  if (jobs == 0) throw ConfigError("jobs must be at least 1");
  if (dikp_width == 0 || dikp_kernel_width == 0) throw ConfigError("generator widths must be positive");
  tv_config().validate();
  blind_tv_config().validate();
  if (dikp_iters == 0 || curves_iters == 0) throw ConfigError("iteration budgets must be at least 1");
  if (!(dikp_lr > 0.0)) throw ConfigError("dikp_lr must be positive");
  if (!(perturb_sigma >= 0.0)) throw ConfigError("perturb_sigma must be nonnegative");
  if (track_every == 0) throw ConfigError("track_every must be at least 1");
}

std::vector<NamedImage> ExperimentConfig::resolve_images() const {
  std::vector<NamedImage> out;
  for (const auto& entry : images) {
    const auto eq = entry.find('=');
    if (eq != std::string::npos) {
      out.push_back({entry.substr(0, eq), entry.substr(eq + 1)});
      continue;
    }
    bool found = false;
    for (const char* ext : {".pgm", ".ppm"}) {
      const fs::path p = image_dir / (entry + ext);
      if (fs::exists(p)) {
        out.push_back({entry, p});
        found = true;
        break;
      }
    }
    if (!found) throw IoError("no " + entry + ".pgm or " + entry + ".ppm in " + image_dir.string());
  }
  return out;
}

baseline::BaselineConfig ExperimentConfig::tv_config() const {
  auto c = baseline::BaselineConfig::kernel_known();
  c.alpha = tv_alpha;
  c.inner_iters_x = tv_iters;
  c.prox_iters = tv_prox_iters;
  return c;
}

baseline::BaselineConfig ExperimentConfig::blind_tv_config() const {
  auto c = baseline::BaselineConfig::blind();
  c.alpha = blind_alpha;
  c.beta = blind_beta;
  c.outer_iters = blind_outer;
  c.inner_iters_x = blind_inner_x;
  c.inner_iters_k = blind_inner_k;
  c.prox_iters = tv_prox_iters;
  return c;
}

DikpConfig ExperimentConfig::dikp_config(std::size_t channels, std::size_t rows, std::size_t cols,
                                         std::uint64_t run_seed) const {
  DikpConfig c;
  const std::size_t width = full ? 128 : dikp_width;
  const std::size_t kwidth = full ? 128 : dikp_kernel_width;
  c.image_net = nn::HourglassConfig::image_net(channels, rows, cols, width);
  c.kernel_net = nn::HourglassConfig::kernel_net(kernel_size, kernel_size, kwidth);
  c.lr = dikp_lr;
  c.iters = dikp_iters;
  c.input_noise_scale = input_noise;
  c.perturb_sigma = perturb_sigma;
  c.track_every = track_every;
  c.seed = run_seed;
  return c;
}

Kernel ExperimentConfig::make_named_kernel(std::string_view kind) const {
  const KernelCenter center{kernel_size / 2, kernel_size / 2};
  if (kind == "delta") return Kernel::delta(kernel_size, kernel_size, center);
  return make_kernel(KernelSpec::defaults(parse_kernel_kind(kind), kernel_size, kernel_size));
}

Image ExperimentConfig::prepare(const Image& img) const {
  if (full || crop == 0) {
    const std::size_t r = img.rows() / 32 * 32, c = img.cols() / 32 * 32;
    if (r == 0 || c == 0) throw ShapeError("image smaller than 32 x 32");
    return center_crop(img, r, c);
  }
  return center_crop(img, crop, crop);
}

std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  // Shortest form that parses back to the same double.
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string to_csv_line(const ResultRow& r) {
  return r.image + "," + r.kernel + "," + r.method + "," + std::to_string(r.seed) + "," + format_number(r.psnr) +
         "," + format_number(r.energy_final) + "," + format_number(r.wall_seconds);
}

SolveOutcome run_method(Method m, const Image& observed, const std::optional<Kernel>& known,
                        const ExperimentConfig& cfg, std::uint64_t seed) {
  if (!is_blind(m) && !known) throw ConfigError(std::string(to_string(m)) + " needs a kernel");
  const auto t0 = std::chrono::steady_clock::now();
  SolveOutcome out;
  switch (m) {
    case Method::Tv: {
      auto r = baseline::tv_deconv(observed, *known, cfg.tv_config());
      out.image = std::move(r.image);
      out.energy_final = r.trace.objective.back();
      out.trace_csv = baseline::trace_to_csv(r.trace);
      break;
    }
    case Method::BlindTv: {
      const KernelCenter c{cfg.kernel_size / 2, cfg.kernel_size / 2};
      auto r = baseline::blind_tv_l1(observed, cfg.blind_tv_config(),
                                     Kernel::uniform(cfg.kernel_size, cfg.kernel_size, c));
      out.image = std::move(r.image);
      out.kernel = std::move(r.kernel);
      out.energy_final = r.trace.objective.back();
      out.trace_csv = baseline::trace_to_csv(r.trace);
      break;
    }
    case Method::Dikp:
    case Method::BlindDikp: {
      const auto dc = cfg.dikp_config(observed.channels(), observed.rows(), observed.cols(), seed);
      auto r = m == Method::Dikp ? dikp_deconv(observed, *known, dc) : dikp_blind(observed, dc);
      out.image = std::move(r.image);
      out.kernel = std::move(r.kernel);
      out.energy_final = r.best_energy;
      out.trace_csv = energy_trace_to_csv(r);
      break;
    }
  }
  out.seconds = elapsed(t0);
  return out;
}

GridResult run_grid(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto named = cfg.resolve_images();
  std::vector<Image> originals;
  for (const auto& n : named) {
    originals.push_back(cfg.prepare(load_image(n.path)));
    save_image_to(originals.back(), cfg.out / "originals" / (n.name + image_ext(originals.back())));
  }
  std::vector<Kernel> kernels;
  for (const auto& k : cfg.kernels) {
    kernels.push_back(cfg.make_named_kernel(k));
    save_kernel_to(kernels.back(), cfg.out / "kernels" / (k + ".csv"));
  }

  GridResult grid;
  struct Cell {
    std::size_t image, kernel, seed_index, obs;
    Method method;
  };
  std::vector<Image> observations;
  std::vector<Cell> cells;
  for (std::size_t i = 0; i < named.size(); ++i)
    for (std::size_t k = 0; k < kernels.size(); ++k)
      for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
        const auto seed = cfg.seeds[s];
        observations.push_back(degrade(originals[i], kernels[k], cfg.sigma, seed));
        const std::string stem = named[i].name + "_" + cfg.kernels[k] + "_s" + std::to_string(seed);
        save_image_to(observations.back(), cfg.out / "observed" / (stem + image_ext(originals[i])));
        grid.observed.push_back({named[i].name, cfg.kernels[k], "observed", seed,
                                 psnr(observations.back(), originals[i]), 0.0, 0.0});
        for (const auto& m : cfg.methods) cells.push_back({i, k, s, observations.size() - 1, parse_method(m)});
      }

  std::vector<std::optional<ResultRow>> rows(cells.size());
  std::vector<std::string> errors(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t c = next++; c < cells.size(); c = next++) {
      const Cell& cell = cells[c];
      const auto seed = cfg.seeds[cell.seed_index];
      const std::string mname(to_string(cell.method));
      const std::string label = named[cell.image].name + "_" + cfg.kernels[cell.kernel] + "_" + mname + "_s" +
                                std::to_string(seed);
      try {
        const auto r = run_method(cell.method, observations[cell.obs], kernels[cell.kernel], cfg, seed);
        const fs::path dir = cfg.out / "cells" / label;
        save_image_to(r.image, dir / ("restored" + image_ext(r.image)));
        write_text(dir / "trace.csv", r.trace_csv);
        if (r.kernel) save_kernel_to(*r.kernel, dir / "kernel.csv");
        rows[c] = ResultRow{named[cell.image].name, cfg.kernels[cell.kernel], mname, seed,
                            psnr(r.image, originals[cell.image]), r.energy_final, r.seconds};
        log_line(label, ": psnr ", rows[c]->psnr, " dB, ", r.seconds, " s");
      } catch (const std::exception& e) {
        errors[c] = e.what();
        log_line(label, ": FAILED: ", e.what());
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < std::min(cfg.jobs, cells.size()); ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (rows[c]) {
      grid.rows.push_back(*rows[c]);
    } else {
      const Cell& cell = cells[c];
      grid.failures.push_back({named[cell.image].name, cfg.kernels[cell.kernel], std::string(to_string(cell.method)),
                               cfg.seeds[cell.seed_index], errors[c]});
    }
  }

  std::string results(kResultHeader);
  results += "\n";
  for (const auto& r : grid.observed) results += to_csv_line(r) + "\n";
  for (const auto& r : grid.rows) results += to_csv_line(r) + "\n";
  write_text(cfg.out / "results.csv", results);
  std::string failures = "image,kernel,method,seed,error\n";
  for (const auto& f : grid.failures) {
    std::string msg = f.error;
    std::replace(msg.begin(), msg.end(), ',', ';');
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    failures += f.image + "," + f.kernel + "," + f.method + "," + std::to_string(f.seed) + "," + msg + "\n";
  }
  write_text(cfg.out / "failures.csv", failures);

  std::vector<std::string> names;
  for (const auto& n : named) names.push_back(n.name);
  write_text(cfg.out / "table.csv", format_table(grid, names, cfg.kernels, cfg.methods, false));
  write_text(cfg.out / "table_std.csv", format_table(grid, names, cfg.kernels, cfg.methods, true));
  return grid;
}

std::string format_table(const GridResult& grid, const std::vector<std::string>& images,
                         const std::vector<std::string>& kernels, const std::vector<std::string>& methods,
                         bool std_dev) {
  auto summarize = [&](const std::vector<double>& v) {
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    if (!std_dev) return mean;
    if (v.size() < 2) return 0.0;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
  };
  auto cell_text = [](double v) {
    if (!std::isfinite(v)) return format_number(v);
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.10f", v);
    return std::string(buf);
  };

  std::string out = "kernel,method";
  for (const auto& n : images) out += "," + n;
  out += ",average\n";
  std::vector<std::string> row_methods{"observed"};
  row_methods.insert(row_methods.end(), methods.begin(), methods.end());
  for (const auto& k : kernels) {
    for (const auto& m : row_methods) {
      out += k + "," + m;
      std::vector<double> per_image;
      bool failed = false;
      for (const auto& n : images) {
        const bool cell_failed = std::any_of(grid.failures.begin(), grid.failures.end(), [&](const GridFailure& f) {
          return f.image == n && f.kernel == k && f.method == m;
        });
        std::vector<double> v;
        const auto& src = m == "observed" ? grid.observed : grid.rows;
        for (const auto& r : src)
          if (r.image == n && r.kernel == k && r.method == m) v.push_back(r.psnr);
        if (cell_failed || v.empty()) {
          failed = true;
          out += ",FAILED";
          continue;
        }
        per_image.push_back(summarize(v));
        out += "," + cell_text(per_image.back());
      }
      if (failed) {
        out += ",FAILED\n";
      } else {
        // The average column summarizes the per-image values in this row.
        const double avg = std::accumulate(per_image.begin(), per_image.end(), 0.0) /
                           static_cast<double>(per_image.size());
        out += "," + cell_text(avg) + "\n";
      }
    }
  }
  return out;
}

namespace {

void cmd_degrade(const ExperimentConfig& cfg) {
  if (cfg.image.empty()) throw ConfigError("degrade needs --image");
  const Image x = cfg.prepare(load_image(cfg.image));
  const Kernel k = cfg.make_named_kernel(cfg.kernel);
  const Image b = degrade(x, k, cfg.sigma, cfg.seed);
  fs::create_directories(cfg.out);
  save_image_to(x, cfg.out / ("original" + image_ext(x)));
  save_image_to(b, cfg.out / ("observed" + image_ext(b)));
  save_kernel_to(k, cfg.out / "kernel.csv");
}

void cmd_solve(const ExperimentConfig& cfg) {
  if (cfg.observed.empty()) throw ConfigError("solve needs --observed");
  if (cfg.reference.empty()) throw ConfigError("solve needs --reference");
  const Method m = parse_method(cfg.method);
  std::optional<Kernel> k;
  if (!is_blind(m)) {
    if (cfg.kernel_file.empty()) throw ConfigError(cfg.method + " needs --kernel-file");
    k = load_kernel_csv(cfg.kernel_file);
  }
  const Image b = cfg.prepare(load_image(cfg.observed));
  const Image ref = cfg.prepare(load_image(cfg.reference));
  if (!ref.same_shape(b)) throw ShapeError("reference and observation shapes differ");
  const auto r = run_method(m, b, k, cfg, cfg.seed);
  fs::create_directories(cfg.out);
  save_image_to(r.image, cfg.out / ("restored" + image_ext(r.image)));
  write_text(cfg.out / "trace.csv", r.trace_csv);
  if (r.kernel) save_kernel_to(*r.kernel, cfg.out / "kernel.csv");
  const ResultRow row{cfg.observed.stem().string(), k ? cfg.kernel_file.stem().string() : "blind", cfg.method,
                      cfg.seed, psnr(r.image, ref), r.energy_final, r.seconds};
  write_text(cfg.out / "result.csv", std::string(kResultHeader) + "\n" + to_csv_line(row) + "\n");
  std::cout << to_csv_line(row) << '\n';
}

std::vector<Image> load_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto ext = e.path().extension();
    if (ext == ".pgm" || ext == ".ppm") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Image> out;
  for (const auto& f : files) out.push_back(load_image(f));
  return out;
}

std::vector<Image> load_cells(const fs::path& table_dir, std::string_view method) {
  const fs::path cells = table_dir / "cells";
  if (!fs::is_directory(cells)) throw IoError("no cells directory in " + table_dir.string());
  const std::string tag = "_" + std::string(method) + "_s";
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(cells)) {
    const auto name = e.path().filename().string();
    if (name.find(tag) == std::string::npos) continue;
    for (const char* ext : {"restored.pgm", "restored.ppm"})
      if (fs::exists(e.path() / ext)) files.push_back(e.path() / ext);
  }
  std::sort(files.begin(), files.end());
  std::vector<Image> out;
  for (const auto& f : files) out.push_back(load_image(f));
  return out;
}

void cmd_gradhist(const ExperimentConfig& cfg) {
  std::vector<Image> std_set, reg_set, dikp_set;
  if (!cfg.table_dir.empty()) {
    std_set = load_dir(cfg.table_dir / "originals");
    reg_set = load_cells(cfg.table_dir, "tv");
    dikp_set = load_cells(cfg.table_dir, "dikp");
  }
  if (!cfg.std_dir.empty()) std_set = load_dir(cfg.std_dir);
  if (!cfg.reg_dir.empty()) reg_set = load_dir(cfg.reg_dir);
  if (!cfg.dikp_dir.empty()) dikp_set = load_dir(cfg.dikp_dir);
  const auto hs = gradient_histogram(std_set);
  const auto hr = gradient_histogram(reg_set);
  const auto hd = gradient_histogram(dikp_set);
  save_histogram_csv(hs, cfg.out / "hist_std.csv");
  save_histogram_csv(hr, cfg.out / "hist_reg.csv");
  save_histogram_csv(hd, cfg.out / "hist_dikp.csv");
  const std::string kl = "pair,kl\ndikp||std," + format_number(kl_divergence(hd, hs)) + "\nreg||std," +
                         format_number(kl_divergence(hr, hs)) + "\nstd||std," +
                         format_number(kl_divergence(hs, hs)) + "\n";
  write_text(cfg.out / "kl.csv", kl);
  std::cout << kl;
}

void cmd_curves(const ExperimentConfig& cfg) {
  const auto named = cfg.resolve_images();
  std::vector<std::pair<std::string, Image>> targets;
  for (const auto& n : named) targets.emplace_back(n.name, to_gray(cfg.prepare(load_image(n.path))));
  const std::size_t rows = targets.front().second.rows(), cols = targets.front().second.cols();
  std::string finals = "kernel,seed,target,energy_final\n";
  for (const auto& kname : cfg.kernels) {
    const Kernel k = cfg.make_named_kernel(kname);
    for (const auto seed : cfg.seeds) {
      auto all = targets;
      all.emplace_back("gaussian_noise", gaussian_noise_image(1, rows, cols, seed));
      all.emplace_back("uniform_noise", uniform_noise_image(1, rows, cols, seed));
      auto dc = cfg.dikp_config(1, rows, cols, seed);
      dc.iters = cfg.curves_iters;
      dc.track_every = 1;
      const auto t0 = std::chrono::steady_clock::now();
      const auto traces = convergence_bias_experiment(all, k, dc);
      log_line("curves ", kname, " seed ", seed, ": ", elapsed(t0), " s");

      auto emit = [&](std::size_t from, std::size_t to) {
        std::string csv = "iter";
        for (const auto& t : traces) csv += "," + t.label;
        csv += "\n";
        for (std::size_t it = from; it < to; ++it) {
          csv += std::to_string(it);
          for (const auto& t : traces) csv += "," + format_number(t.energy[it]);
          csv += "\n";
        }
        return csv;
      };
      const std::string stem = "curves_" + kname + "_s" + std::to_string(seed);
      write_text(cfg.out / (stem + ".csv"), emit(0, cfg.curves_iters));
      const std::size_t zend = std::min(cfg.zoom_end + 1, cfg.curves_iters);
      if (cfg.zoom_begin < zend) write_text(cfg.out / (stem + "_zoom.csv"), emit(cfg.zoom_begin, zend));
      for (const auto& t : traces)
        finals += kname + "," + std::to_string(seed) + "," + t.label + "," + format_number(t.energy.back()) + "\n";
    }
  }
  write_text(cfg.out / "curves_final.csv", finals);
}

const std::vector<std::string> kCommonKeys{"seed", "out"};
const std::vector<std::string> kSolverKeys{
    "tv_alpha",   "tv_iters",          "tv_prox_iters", "blind_alpha",   "blind_beta",  "blind_outer",
    "blind_inner_x", "blind_inner_k",  "dikp_iters",    "dikp_width",    "dikp_kernel_width",
    "dikp_lr",    "perturb_sigma",     "input_noise",   "track_every",   "kernel_size"};

std::map<std::string, std::vector<std::string>> command_keys() {
  auto with = [](std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };
  return {
      {"degrade", {"image", "kernel", "kernel_size", "sigma", "crop"}},
      {"solve", with({"observed", "reference", "kernel_file", "method", "crop"}, kSolverKeys)},
      {"table", with({"images", "image_dir", "kernels", "methods", "seeds", "sigma", "crop", "jobs"}, kSolverKeys)},
      {"gradhist", {"table_dir", "std_dir", "reg_dir", "dikp_dir"}},
      {"curves", with({"images", "image_dir", "kernels", "seeds", "crop", "curves_iters", "zoom_begin", "zoom_end"},
                      kSolverKeys)},
  };
}

std::string flag_name(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return "--" + key;
}

int dispatch(const std::string& command, const ExperimentConfig& cfg) {
  cfg.validate();
  fs::create_directories(cfg.out);
  KeyValues manifest = cfg.to_key_values();
  manifest["command"] = command;
  int code = 0;
  if (command == "degrade") {
    cmd_degrade(cfg);
  } else if (command == "solve") {
    cmd_solve(cfg);
  } else if (command == "table") {
    const auto grid = run_grid(cfg);
    std::cout << read_text(cfg.out / "table.csv");
    if (!grid.failures.empty()) code = 2;
  } else if (command == "gradhist") {
    cmd_gradhist(cfg);
  } else if (command == "curves") {
    cmd_curves(cfg);
  } else {
    throw ConfigError("unknown command '" + command + "'");
  }
  write_text(cfg.out / "manifest.txt", format_key_values(manifest));
  return code;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Image deconvolution with untrained generator priors and TV baselines"};
  app.require_subcommand(1);

  struct Sub {
    CLI::App* app = nullptr;
    std::string config;
    bool full = false;
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;
  };
  std::map<std::string, Sub> subs;
  const std::map<std::string, std::string> descriptions{
      {"degrade", "blur and add noise to an image"},
      {"solve", "restore one observation"},
      {"table", "run the image x kernel x method grid"},
      {"gradhist", "gradient histograms and KL divergences"},
      {"curves", "energy curves for natural images and noise"},
  };
  for (const auto& [name, keys] : command_keys()) {
    Sub& s = subs[name];
    s.app = app.add_subcommand(name, descriptions.at(name));
    s.app->add_option("--config", s.config, "key = value file; flags override it")->check(CLI::ExistingFile);
    for (const auto& key : kCommonKeys) s.options[key] = s.app->add_option(flag_name(key), s.values[key]);
    for (const auto& key : keys) s.options[key] = s.app->add_option(flag_name(key), s.values[key]);
    if (name != "gradhist") s.app->add_flag("--full", s.full, "full-resolution inputs, width-128 generators");
  }
  std::string replay_manifest, replay_out;
  auto* replay = app.add_subcommand("replay", "re-run a command from its manifest");
  replay->add_option("manifest", replay_manifest)->required()->check(CLI::ExistingFile);
  replay->add_option("--out", replay_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (replay->parsed()) {
      KeyValues kv = read_key_values(replay_manifest);
      const auto it = kv.find("command");
      if (it == kv.end()) throw ConfigError("manifest has no command");
      const std::string command = it->second;
      kv.erase(it);
      if (!replay_out.empty()) kv["out"] = replay_out;
      ExperimentConfig cfg;
      cfg.apply(kv);
      return dispatch(command, cfg);
    }
    for (auto& [name, s] : subs) {
      if (!s.app->parsed()) continue;
      KeyValues kv;
      if (!s.config.empty()) {
        kv = read_key_values(s.config);
        const auto it = kv.find("command");
        if (it != kv.end()) {
          if (it->second != name) throw ConfigError("config was written by '" + it->second + "'");
          kv.erase(it);
        }
      }
      for (const auto& [key, opt] : s.options)
        if (opt->count() > 0) kv[key] = s.values[key];
      if (s.full) kv["full"] = "true";
      ExperimentConfig cfg;
      cfg.apply(kv);
      return dispatch(name, cfg);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"dikp"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace dikp::harness
