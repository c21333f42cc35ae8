#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cps/bench.hpp"
#include "cps/io.hpp"
#include "cps/problems.hpp"
#include "cps/report.hpp"

namespace cps::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,     // unexpected error
  kUsage = 2,       // bad flags, malformed config or descriptor
  kInput = 3,       // unreadable or malformed input file
  kParameter = 4,   // invalid parameter or inconsistent shapes
  kDivergence = 5,  // non-finite solver iterate
  kCheck = 6,       // prox-check deviation above tolerance
};

inline const char* kExitCodeHelp =
    "Exit codes:\n"
    "  0  success\n"
    "  1  unexpected error\n"
    "  2  bad flags, malformed config or descriptor\n"
    "  3  unreadable or malformed input file\n"
    "  4  invalid parameter or inconsistent shapes\n"
    "  5  solver divergence\n"
    "  6  prox-check deviation above tolerance\n";

/// Malformed configuration or descriptor text.
class ConfigError : public Error {
public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Shared options

struct CommonOptions {
  std::string config;
  std::string report;
  std::string penalty = "cauchy";
  std::string gamma = "auto";
  double weight = 0.1;
  std::string mu = "auto";
  double eps = 1e-3;
  int max_iter = 500;
  std::uint64_t seed = 0;
  std::string sigma = "auto";
};

inline std::optional<double> auto_or_value(const std::string& s, const char* name) {
  if (s == "auto") return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(std::string(name) + " must be 'auto' or a number, got '" + s + "'");
}

inline void add_common(CLI::App* sub, CommonOptions& c, int default_max_iter = 500) {
  c.max_iter = default_max_iter;
  sub->add_option("--config", c.config, "key = value file; flags override it");
  sub->add_option("--report", c.report, "JSON report path (default: stdout)");
  sub->add_option("--penalty", c.penalty, "cauchy | l1 | tv")->capture_default_str();
  sub->add_option("--gamma", c.gamma, "Cauchy scale: auto (sqrt(mu)/2) or a value")->capture_default_str();
  sub->add_option("--weight", c.weight, "L1/TV weight")->capture_default_str();
  sub->add_option("--mu", c.mu, "step size: auto or a value")->capture_default_str();
  sub->add_option("--eps", c.eps, "relative-change stopping threshold")->capture_default_str();
  sub->add_option("--max-iter", c.max_iter, "iteration cap")->capture_default_str();
  sub->add_option("--seed", c.seed, "seed for noise and power iteration")->capture_default_str();
  sub->add_option("--sigma", c.sigma, "noise level: auto or a value")->capture_default_str();
}

inline PenaltyConfig resolve_penalty(const CommonOptions& c) {
  PenaltyConfig p;
  try {
    p.kind = parse_penalty_kind(c.penalty);
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
  p.weight = c.weight;
  if (auto g = auto_or_value(c.gamma, "gamma")) p.gamma = *g;
  return p;
}

inline SolverConfig resolve_solver(const CommonOptions& c) {
  SolverConfig s;
  s.mu = auto_or_value(c.mu, "mu");
  s.gamma_policy = c.gamma == "auto" ? GammaPolicy::auto_from_mu : GammaPolicy::explicit_value;
  s.eps = c.eps;
  s.max_iter = c.max_iter;
  s.seed = c.seed;
  return s;
}

// ---------------------------------------------------------------------------
// Scene descriptors

inline double parse_number(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError("descriptor key '" + key + "': '" + v + "' is not a number");
}

inline std::array<double, 5> parse_five(const std::string& key, const std::string& v) {
  std::array<double, 5> out{};
  std::stringstream ss(v);
  std::string cell;
  std::size_t i = 0;
  while (std::getline(ss, cell, ',')) {
    if (i == 5) break;
    const auto b = cell.find_first_not_of(' '), e = cell.find_last_not_of(' ');
    out[i++] = parse_number(key, b == std::string::npos ? cell : cell.substr(b, e - b + 1));
  }
  if (i != 5 || std::getline(ss, cell, ','))
    throw ConfigError("descriptor key '" + key + "' needs 5 comma-separated values");
  return out;
}

/// Scene description in `key = value` form. Wake keys: turbulent_angle,
/// turbulent_offset, contrast (5 values, canonical order), truth (5 flags),
/// narrow_v_half_angle, kelvin_half_angle, sea_looks, line_width.
inline SceneDescriptor parse_descriptor(const ConfigMap& m) {
  SceneDescriptor d;
  for (const auto& [k, v] : m) {
    if (k == "kind") {
      try {
        d.kind = parse_scene_kind(v);
      } catch (const ParameterError& e) {
        throw ConfigError(e.what());
      }
    } else if (k == "size") d.size = std::size_t(parse_number(k, v));
    else if (k == "seed") d.seed = std::uint64_t(parse_number(k, v));
    else if (k == "scatterers") d.scatterers = int(parse_number(k, v));
    else if (k == "background") d.background = parse_number(k, v);
    else if (k == "turbulent_angle") d.wake.turbulent_angle = parse_number(k, v);
    else if (k == "turbulent_offset") d.wake.turbulent_offset = parse_number(k, v);
    else if (k == "contrast") d.wake.contrast = parse_five(k, v);
    else if (k == "narrow_v_half_angle") d.wake.narrow_v_half_angle = parse_number(k, v);
    else if (k == "kelvin_half_angle") d.wake.kelvin_half_angle = parse_number(k, v);
    else if (k == "sea_looks") d.wake.looks = parse_number(k, v);
    else if (k == "line_width") d.wake.line_width = parse_number(k, v);
    else if (k == "truth") {
      const auto t = parse_five(k, v);
      WakeFlags f{};
      for (std::size_t i = 0; i < 5; ++i) f[i] = t[i] != 0.0;
      d.truth = f;
    } else {
      throw ConfigError("unknown descriptor key '" + k + "'");
    }
  }
  if (d.truth && d.kind != SceneKind::wake_scene)
    throw ConfigError("truth flags are only valid for wake scenes");
  return d;
}

inline SceneDescriptor read_descriptor(const std::string& path) {
  try {
    return parse_descriptor(read_config(path));
  } catch (const FormatError& e) {
    throw ConfigError(e.what());
  }
}

// ---------------------------------------------------------------------------
// Output helpers

class Clock {
public:
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0_).count();
  }

private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

inline Json scale_json(const std::optional<PgmScale>& s) {
  if (!s) return nullptr;
  return {{"offset", json_number(s->offset)}, {"range", json_number(s->range)}, {"rescaled", s->rescaled}};
}

inline std::optional<PgmScale> maybe_write(const std::string& path, const Image& img) {
  if (path.empty()) return std::nullopt;
  const PgmScale sc = write_image(path, img);
  if (raster_format(path) == RasterFormat::csv) return std::nullopt;
  return sc;
}

inline void emit_report(const Json& j, const std::string& path, std::ostream& out) {
  const std::string text = j.dump(2) + "\n";
  if (path.empty()) out << text;
  else write_file_atomic(path, text);
}

inline Image signed_difference(const Image& a, const Image& b) { return a - b; }

inline Image ratio_image(const Image& num, const Image& den) {
  num.check_same(den);
  Image r(num.shape());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = den[i] != 0.0 ? num[i] / den[i] : 0.0;
  return r;
}

// ---------------------------------------------------------------------------
// Subcommands

struct SuperresOptions {
  CommonOptions common;
  std::string input, descriptor, truth, output, diff;
  int factor = 2;
  int psf_size = 5;
  double psf_std = 2.0;
  double bsnr_db = 30.0;
};

inline int run_superres(const SuperresOptions& o, std::ostream& out) {
  Clock clock;
  const PenaltyConfig pen = resolve_penalty(o.common);
  const SolverConfig cfg = resolve_solver(o.common);
  const Image psf = gaussian_psf(o.psf_size, o.psf_std);

  Image low;
  std::optional<Image> truth;
  std::optional<double> known_sigma;
  if (!o.descriptor.empty()) {
    const SceneDescriptor d = read_descriptor(o.descriptor);
    truth = gen_phantom(d);
    const SrObservation obs = degrade_sr(*truth, psf, o.factor, o.bsnr_db, o.common.seed);
    low = obs.low_res;
    known_sigma = obs.sigma;
  } else {
    if (o.input.empty()) throw ConfigError("superres needs --input or --descriptor");
    low = read_image(o.input);
    if (!o.truth.empty()) truth = read_image(o.truth);
  }
  double sigma = 0.0;
  if (auto s = auto_or_value(o.common.sigma, "sigma")) sigma = *s;
  else sigma = known_sigma && *known_sigma > 0.0 ? *known_sigma : estimate_noise_sigma(low);

  const SolveResult r = superresolve(low, psf, o.factor, pen, cfg, sigma);
  const Image bic = bicubic_upsample(low, o.factor);
  const auto scale = maybe_write(o.output, r.solution);
  maybe_write(o.diff, signed_difference(r.solution, truth ? *truth : bic));

  Json j = solve_fields("superres", pen, r, cfg);
  j["sigma"] = json_number(sigma);
  j["factor"] = o.factor;
  j["psf"] = {{"size", o.psf_size}, {"std", o.psf_std}};
  Json metrics = Json::object();
  if (truth) {
    metrics["psnr"] = json_number(psnr(*truth, r.solution));
    metrics["ssim"] = json_number(ssim(*truth, r.solution));
    metrics["rmse"] = json_number(rmse(*truth, r.solution));
    metrics["bicubic_psnr"] = json_number(psnr(*truth, bic));
  }
  j["metrics"] = metrics;
  j["seed"] = o.common.seed;
  j["scale"] = scale_json(scale);
  j["wall_ms"] = clock.ms();
  emit_report(j, o.common.report, out);
  return kOk;
}

struct DespeckleOptions {
  CommonOptions common;
  std::string input, descriptor, output, ratio;
  std::string speckle = "gamma";
  double looks = 5.0;
  int levels = 3;
};

inline int run_despeckle(const DespeckleOptions& o, std::ostream& out) {
  Clock clock;
  const PenaltyConfig pen = resolve_penalty(o.common);
  const SolverConfig cfg = resolve_solver(o.common);

  Image y;
  std::optional<Image> truth;
  if (!o.descriptor.empty()) {
    const SceneDescriptor d = read_descriptor(o.descriptor);
    truth = gen_phantom(d);
    Image v;
    if (o.speckle == "gamma") v = gen_gamma_speckle(o.looks, truth->shape(), o.common.seed);
    else if (o.speckle == "lognormal") v = gen_lognormal_speckle(o.looks, truth->shape(), o.common.seed);
    else throw ConfigError("speckle must be gamma or lognormal, got '" + o.speckle + "'");
    y = apply_speckle(*truth, v);
  } else {
    if (o.input.empty()) throw ConfigError("despeckle needs --input or --descriptor");
    y = read_image(o.input);
  }

  const DespeckleResult r = despeckle(y, pen, cfg, o.levels, auto_or_value(o.common.sigma, "sigma"));
  const auto scale = maybe_write(o.output, r.image);
  maybe_write(o.ratio, ratio_image(y, r.image));

  // Every band shares mu and gamma; iterations and convergence aggregate.
  SolveResult summary;
  summary.converged = true;
  Json bands = Json::array();
  for (const auto& b : r.bands) {
    summary.iterations = std::max(summary.iterations, b.iterations);
    summary.converged = summary.converged && b.converged;
    bands.push_back({{"iterations", b.iterations},
                     {"converged", b.converged},
                     {"cost_trace", json_numbers(b.cost_trace)}});
  }
  if (!r.bands.empty()) {
    const auto& f = r.bands.front();
    summary.mu = f.mu;
    summary.gamma = f.gamma;
    summary.lipschitz = f.lipschitz;
    summary.opnorm_sq = f.opnorm_sq;
    summary.cost_trace = f.cost_trace;
    summary.warnings = f.warnings;
  }

  Json j = solve_fields("despeckle", pen, summary, cfg);
  j["sigma"] = json_number(r.sigma);
  j["levels"] = o.levels;
  j["bands"] = bands;
  Json metrics = Json::object();
  if (truth) {
    metrics["psnr"] = json_number(psnr(*truth, r.image));
    metrics["smse"] = json_number(smse(*truth, r.image));
    metrics["ssim"] = json_number(ssim(*truth, r.image));
    metrics["noisy_psnr"] = json_number(psnr(*truth, y));
    metrics["noisy_smse"] = json_number(smse(*truth, y));
    j["speckle"] = {{"model", o.speckle}, {"looks", o.looks}};
  }
  j["metrics"] = metrics;
  j["seed"] = o.common.seed;
  j["scale"] = scale_json(scale);
  j["wall_ms"] = clock.ms();
  emit_report(j, o.common.report, out);
  return kOk;
}

struct FormOptions {
  CommonOptions common;
  std::string input, matrix, descriptor, output, diff;
  std::string shape;  // RxC of the scene when reading a matrix
  double sampling = 0.5;
  double snr_db = 0.0;
};

inline Shape parse_shape(const std::string& s) {
  const auto x = s.find('x');
  if (x == std::string::npos) throw ConfigError("shape must look like 32x32, got '" + s + "'");
  try {
    return {std::stoul(s.substr(0, x)), std::stoul(s.substr(x + 1))};
  } catch (const std::exception&) {
    throw ConfigError("shape must look like 32x32, got '" + s + "'");
  }
}

inline int run_form(const FormOptions& o, std::ostream& out) {
  Clock clock;
  const PenaltyConfig pen = resolve_penalty(o.common);
  const SolverConfig cfg = resolve_solver(o.common);

  LinearOperator phi;
  Image y;
  std::optional<Image> truth;
  std::optional<double> known_sigma;
  if (!o.descriptor.empty()) {
    const SceneDescriptor d = read_descriptor(o.descriptor);
    truth = gen_phantom(d);
    const auto m = std::size_t(std::lround(o.sampling * double(truth->size())));
    phi = random_measurement_operator(m, truth->shape(), d.seed + 500);
    const Image clean = phi.apply(*truth);
    known_sigma = std::sqrt(squared_norm(clean) / double(clean.size()) / std::pow(10.0, o.snr_db / 10.0));
    y = awgn(clean, *known_sigma, o.common.seed);
  } else {
    if (o.matrix.empty() || o.input.empty())
      throw ConfigError("form needs --matrix and --input, or --descriptor");
    DenseMatrix M = read_matrix_csv(o.matrix);
    const Shape scene = o.shape.empty() ? Shape{M.cols, 1} : parse_shape(o.shape);
    phi = matrix_operator(std::move(M), scene);
    const Image raw = read_image(o.input);
    if (raw.size() != phi.out_shape().size())
      throw ContractError("measurement file has " + std::to_string(raw.size()) + " values, matrix has " +
                          std::to_string(phi.out_shape().size()) + " rows");
    y = Image(phi.out_shape(), raw.data());
  }
  double sigma = 0.0;
  if (auto s = auto_or_value(o.common.sigma, "sigma")) sigma = *s;
  else if (known_sigma) sigma = *known_sigma;
  else throw ConfigError("form reading measurements from file needs an explicit --sigma");

  const SolveResult r = form_image(y, phi, pen, cfg, sigma);
  const Image mf = matched_filter_recon(y, phi);
  const auto scale = maybe_write(o.output, r.solution);
  maybe_write(o.diff, signed_difference(r.solution, mf));

  Json j = solve_fields("form", pen, r, cfg);
  j["sigma"] = json_number(sigma);
  j["measurements"] = phi.out_shape().size();
  Json metrics = Json::object();
  metrics["re"] = json_number(relative_error(r.solution, mf));
  if (truth) {
    metrics["rmse"] = json_number(rmse(*truth, r.solution));
    metrics["matched_filter_rmse"] = json_number(rmse(*truth, mf));
  }
  j["metrics"] = metrics;
  j["seed"] = o.common.seed;
  j["scale"] = scale_json(scale);
  j["wall_ms"] = clock.ms();
  emit_report(j, o.common.report, out);
  return kOk;
}

struct WakeOptions {
  CommonOptions common;
  std::string input, descriptor, output;
  std::size_t angles = 180;
  DetectConfig detect;
};

inline int run_wake(const WakeOptions& o, std::ostream& out) {
  Clock clock;
  const PenaltyConfig pen = resolve_penalty(o.common);
  SolverConfig cfg = resolve_solver(o.common);

  Image img;
  std::optional<WakeFlags> truth;
  if (!o.descriptor.empty()) {
    SceneDescriptor d = read_descriptor(o.descriptor);
    if (d.kind != SceneKind::wake_scene) throw ConfigError("wake descriptor must have kind = wake_scene");
    const WakeScene scene = gen_wake_scene(d);
    img = scene.image;
    truth = scene.truth;
  } else {
    if (o.input.empty()) throw ConfigError("wake needs --input or --descriptor");
    img = read_image(o.input);
  }
  if (o.common.sigma != "auto")
    throw ConfigError("wake estimates sigma from the image; --sigma must be auto");

  const RadonGeometry geom = RadonGeometry::standard(img.rows(), o.angles);
  const WakeReport rep = detect_wakes(img, geom, pen, cfg, o.detect);
  const auto scale = maybe_write(o.output, rep.omega_hat);

  Json j = solve_fields("wake", pen, rep.solve, cfg);
  j["angles"] = o.angles;
  j["detect"] = {{"narrow_window", o.detect.narrow_window},
                 {"kelvin_window", {o.detect.kelvin_lo, o.detect.kelvin_hi}},
                 {"tau", o.detect.tau},
                 {"offset_window", o.detect.offset_window},
                 {"false_alarm", o.detect.false_alarm}};
  Json hyps = Json::array();
  for (const auto& h : rep.hypotheses)
    hyps.push_back({{"kind", std::string(to_string(h.kind))},
                    {"r", json_number(h.r)},
                    {"theta", json_number(h.theta)},
                    {"polarity", h.polarity == Polarity::dark ? "dark" : "bright"},
                    {"visible", h.decided_visible},
                    {"score", json_number(h.score)},
                    {"line_z", json_number(h.line_z)}});
  j["hypotheses"] = hyps;
  Json metrics = Json::object();
  if (truth) {
    const ConfusionCounts c = classify_detections(rep, *truth);
    metrics = {{"tp", c.tp}, {"tn", c.tn}, {"fp", c.fp}, {"fn", c.fn},
               {"accuracy", json_number(double(c.tp + c.tn) / double(c.total()))}};
  }
  j["metrics"] = metrics;
  j["seed"] = o.common.seed;
  j["scale"] = scale_json(scale);
  j["wall_ms"] = clock.ms();
  emit_report(j, o.common.report, out);
  return kOk;
}

struct BenchOptions {
  std::string config, report;
  std::uint64_t seed = 0;
  bool quick = false;
  std::vector<std::string> suites;
};

inline int run_bench_cmd(const BenchOptions& o, std::ostream& out) {
  Clock clock;
  BenchConfig c = o.quick ? BenchConfig::quick(o.seed) : BenchConfig{};
  c.seed = o.seed;
  std::vector<BenchSuite> suites;
  for (const auto& s : o.suites) {
    if (s == "superres") suites.push_back(BenchSuite::superres);
    else if (s == "despeckle") suites.push_back(BenchSuite::despeckle);
    else if (s == "form") suites.push_back(BenchSuite::form);
    else if (s == "wake") suites.push_back(BenchSuite::wake);
    else throw ConfigError("unknown bench suite '" + s + "'");
  }
  const BenchResult r = suites.empty() ? run_bench(c) : run_bench(c, suites);
  emit_report(bench_json(c, r, clock.ms()), o.report, out);
  return kOk;
}

struct ProxCheckOptions {
  std::string config;
  int samples = 10000;
  std::uint64_t seed = 0;
  double tolerance = 1e-5;
};

inline int run_prox_check(const ProxCheckOptions& o, std::ostream& out) {
  const ProxCheckResult r = prox_check(o.samples, o.seed);
  out << "samples " << r.samples << "\n"
      << "max deviation from golden section " << r.max_deviation << "\n"
      << "max cubic residual " << r.max_residual << "\n";
  return r.max_deviation < o.tolerance ? kOk : kCheck;
}

// ---------------------------------------------------------------------------
// Entry point

namespace detail {

/// Splices `key = value` lines from --config in right after the subcommand
/// name, so flags given later on the command line win.
inline std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty() || args.size() < 2) return args;
  ConfigMap m;
  try {
    m = read_config(path);
  } catch (const FormatError& e) {
    throw ConfigError(e.what());
  } catch (const InputError& e) {
    throw ConfigError(e.what());
  }
  std::vector<std::string> injected;
  for (const auto& [k, v] : m) {
    std::string flag = k;
    for (auto& ch : flag)
      if (ch == '_') ch = '-';
    if (flag == "config") throw ConfigError("config files cannot include other config files");
    if (flag == "suites" || flag == "suite") {
      std::stringstream ss(v);
      std::string s;
      while (std::getline(ss, s, ',')) injected.push_back("--suite=" + s);
      continue;
    }
    injected.push_back("--" + flag + "=" + v);
  }
  args.insert(args.begin() + 2, injected.begin(), injected.end());
  return args;
}

} // namespace detail

inline int run(std::vector<std::string> args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Cauchy proximal splitting for linear imaging inverse problems"};
  app.footer(kExitCodeHelp);
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  SuperresOptions sr;
  auto* sub_sr = app.add_subcommand("superres", "super-resolve a low-resolution image");
  add_common(sub_sr, sr.common);
  sub_sr->add_option("--input", sr.input, "low-resolution raster (.pgm or .csv)");
  sub_sr->add_option("--descriptor", sr.descriptor, "generate the scene from a descriptor file");
  sub_sr->add_option("--truth", sr.truth, "ground-truth raster for metrics");
  sub_sr->add_option("--output", sr.output, "result raster");
  sub_sr->add_option("--diff", sr.diff, "result minus truth (or bicubic) raster");
  sub_sr->add_option("--factor", sr.factor, "decimation factor")->capture_default_str();
  sub_sr->add_option("--psf-size", sr.psf_size, "Gaussian PSF size")->capture_default_str();
  sub_sr->add_option("--psf-std", sr.psf_std, "Gaussian PSF standard deviation")->capture_default_str();
  sub_sr->add_option("--bsnr", sr.bsnr_db, "BSNR in dB for generated scenes")->capture_default_str();

  DespeckleOptions ds;
  auto* sub_ds = app.add_subcommand("despeckle", "remove multiplicative speckle");
  add_common(sub_ds, ds.common, 300);
  sub_ds->add_option("--input", ds.input, "speckled intensity raster");
  sub_ds->add_option("--descriptor", ds.descriptor, "generate the scene from a descriptor file");
  sub_ds->add_option("--output", ds.output, "result raster");
  sub_ds->add_option("--ratio", ds.ratio, "input / result raster");
  sub_ds->add_option("--speckle", ds.speckle, "gamma | lognormal (generated scenes)")->capture_default_str();
  sub_ds->add_option("--looks", ds.looks, "number of looks (generated scenes)")->capture_default_str();
  sub_ds->add_option("--levels", ds.levels, "wavelet levels")->capture_default_str();

  FormOptions fm;
  auto* sub_fm = app.add_subcommand("form", "form an image from linear measurements");
  add_common(sub_fm, fm.common);
  sub_fm->add_option("--input", fm.input, "measurement vector (.csv)");
  sub_fm->add_option("--matrix", fm.matrix, "measurement matrix (.csv, header-free)");
  sub_fm->add_option("--shape", fm.shape, "scene shape RxC for the matrix columns");
  sub_fm->add_option("--descriptor", fm.descriptor, "generate the scene from a descriptor file");
  sub_fm->add_option("--output", fm.output, "result raster");
  sub_fm->add_option("--diff", fm.diff, "result minus matched-filter raster");
  sub_fm->add_option("--sampling", fm.sampling, "measurements per pixel (generated scenes)")->capture_default_str();
  sub_fm->add_option("--snr", fm.snr_db, "measurement SNR in dB (generated scenes)")->capture_default_str();

  WakeOptions wk;
  auto* sub_wk = app.add_subcommand("wake", "detect ship wakes in the line domain");
  add_common(sub_wk, wk.common, 100);
  sub_wk->add_option("--input", wk.input, "square intensity raster");
  sub_wk->add_option("--descriptor", wk.descriptor, "generate the scene from a descriptor file");
  sub_wk->add_option("--output", wk.output, "line-domain estimate raster");
  sub_wk->add_option("--angles", wk.angles, "projection angles over [0, 180)")->capture_default_str();
  sub_wk->add_option("--narrow-window", wk.detect.narrow_window, "degrees")->capture_default_str();
  sub_wk->add_option("--kelvin-lo", wk.detect.kelvin_lo, "degrees")->capture_default_str();
  sub_wk->add_option("--kelvin-hi", wk.detect.kelvin_hi, "degrees")->capture_default_str();
  sub_wk->add_option("--tau", wk.detect.tau, "visibility threshold in robust z units")->capture_default_str();
  sub_wk->add_option("--offset-window", wk.detect.offset_window, "pixels")->capture_default_str();
  sub_wk->add_option("--false-alarm", wk.detect.false_alarm, "per-hypothesis false alarm rate of the data check")
      ->capture_default_str();

  BenchOptions bn;
  auto* sub_bn = app.add_subcommand("bench", "run the synthetic benchmark suites");
  sub_bn->add_option("--config", bn.config, "key = value file; flags override it");
  sub_bn->add_option("--report", bn.report, "JSON report path (default: stdout)");
  sub_bn->add_option("--seed", bn.seed, "base seed")->capture_default_str();
  sub_bn->add_flag("--quick", bn.quick, "reduced sizes");
  sub_bn->add_option("--suite", bn.suites, "superres | despeckle | form | wake (repeatable)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);

  ProxCheckOptions pc;
  auto* sub_pc = app.add_subcommand("prox-check", "compare the closed-form prox with a numerical oracle");
  sub_pc->add_option("--config", pc.config, "key = value file; flags override it");
  sub_pc->add_option("--samples", pc.samples, "number of random triples")->capture_default_str();
  sub_pc->add_option("--seed", pc.seed, "sampling seed")->capture_default_str();
  sub_pc->add_option("--tolerance", pc.tolerance, "maximum allowed deviation")->capture_default_str();

  try {
    args = detail::expand_config(std::move(args));
    std::vector<std::string> rev(args.rbegin(), args.rend());
    if (!rev.empty()) rev.pop_back();  // program name
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (*sub_sr) return run_superres(sr, out);
    if (*sub_ds) return run_despeckle(ds, out);
    if (*sub_fm) return run_form(fm, out);
    if (*sub_wk) return run_wake(wk, out);
    if (*sub_bn) return run_bench_cmd(bn, out);
    if (*sub_pc) return run_prox_check(pc, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kInput;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return kInput;
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kDivergence;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kParameter;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}

inline int run(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return run(std::vector<std::string>(argv, argv + argc), out, err);
}

} // namespace cps::cli
