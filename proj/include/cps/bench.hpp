#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "cps/metrics.hpp"
#include "cps/problems.hpp"

namespace cps {

/// One method on one test case.
struct BenchRecord {
  std::string problem;  // superres, despeckle, form, wake
  std::string case_name;
  std::string method;   // cauchy, l1, tv, bicubic, noisy, matched_filter
  std::uint64_t seed = 0;
  double weight = 0.0;  // l1/tv only
  double gamma = 0.0;
  double mu = 0.0;
  double eps = 0.0;
  int max_iter = 0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> cost_trace;
  std::map<std::string, double> metrics;
  double wall_ms = 0.0;
};

struct SrBenchConfig {
  std::size_t size = 128;
  int phantoms = 3;
  int scatterers = 40;
  double background = 0.01;
  int factor = 2;
  int psf_size = 5;
  double psf_std = 2.0;
  double bsnr_db = 30.0;
  int max_iter = 300;
  double eps = 1e-3;
  std::vector<double> weights = {1e-3, 1e-2, 1e-1, 1.0, 10.0};
};

struct DespeckleBenchConfig {
  std::size_t size = 128;
  int phantoms = 2;
  std::vector<double> looks = {5.0, 15.0};
  int levels = 3;
  int max_iter = 300;
  double eps = 1e-3;
  std::vector<double> weights = {1e-3, 1e-2, 1e-1, 1.0, 10.0};
};

struct FormBenchConfig {
  std::size_t size = 32;
  int scatterers = 20;
  double background = 0.01;
  double sampling = 0.5;  // m / n
  double snr_db = 0.0;    // measurement SNR
  int seeds = 5;
  int max_iter = 500;
  double eps = 1e-3;
  std::vector<double> weights = {1e-3, 1e-2, 1e-1, 1.0, 10.0};
};

struct WakeBenchConfig {
  std::size_t size = 128;
  std::size_t angles = 90;
  int scenes = 20;
  double contrast_lo = 0.4;
  double contrast_hi = 0.8;
  double offset_jitter = 4.0;  // pixels
  double arm_probability = 0.5;
  int max_iter = 100;
  double eps = 1e-3;
  DetectConfig detect;
};

struct BenchConfig {
  std::uint64_t seed = 0;
  SrBenchConfig sr;
  DespeckleBenchConfig despeckle;
  FormBenchConfig form;
  WakeBenchConfig wake;

  /// Small sizes for smoke and determinism runs.
  static BenchConfig quick(std::uint64_t seed = 0) {
    BenchConfig c;
    c.seed = seed;
    c.sr.size = 64;
    c.sr.phantoms = 1;
    c.sr.scatterers = 10;
    c.sr.max_iter = 40;
    c.sr.weights = {1e-2, 1.0};
    c.despeckle.size = 64;
    c.despeckle.phantoms = 1;
    c.despeckle.looks = {5.0};
    c.despeckle.max_iter = 40;
    c.despeckle.weights = {1e-2, 1.0};
    c.form.size = 32;
    c.form.scatterers = 6;
    c.form.seeds = 2;
    c.form.weights = {1e-2, 1.0};
    c.wake.size = 64;
    c.wake.angles = 45;
    c.wake.scenes = 2;
    c.wake.max_iter = 20;
    return c;
  }
};

struct BenchResult {
  std::vector<BenchRecord> records;
  ConfusionCounts wake_counts;
  double wake_mean_accuracy = 0.0;
  int policy_checks = 0;  // auto-policy assertions that ran (all passed)

  std::vector<const BenchRecord*> select(const std::string& problem, const std::string& method) const {
    std::vector<const BenchRecord*> out;
    for (const auto& r : records)
      if (r.problem == problem && r.method == method) out.push_back(&r);
    return out;
  }
};

namespace detail {

class Stopwatch {
public:
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0_).count();
  }

private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

/// Throws unless the resolved step lies in (0, 2/L) and, for Cauchy,
/// gamma >= sqrt(mu)/2.
inline void assert_auto_policy(const SolveResult& r, PenaltyKind kind, int& counter) {
  if (!(r.mu > 0.0 && r.mu * r.lipschitz < 2.0))
    throw Error("auto step " + std::to_string(r.mu) + " outside (0, 2/L), L = " + std::to_string(r.lipschitz));
  if (kind == PenaltyKind::cauchy && !check_convexity_condition(r.gamma, r.mu))
    throw Error("auto gamma " + std::to_string(r.gamma) + " below sqrt(mu)/2");
  ++counter;
}

inline BenchRecord solve_record(const std::string& problem, const std::string& case_name,
                                const PenaltyConfig& pen, const SolveResult& r, const SolverConfig& cfg,
                                std::uint64_t seed) {
  BenchRecord rec;
  rec.problem = problem;
  rec.case_name = case_name;
  rec.method = std::string(to_string(pen.kind));
  rec.seed = seed;
  rec.weight = pen.kind == PenaltyKind::cauchy ? 0.0 : pen.weight;
  rec.gamma = r.gamma;
  rec.mu = r.mu;
  rec.eps = cfg.eps;
  rec.max_iter = cfg.max_iter;
  rec.iterations = r.iterations;
  rec.converged = r.converged;
  rec.cost_trace = r.cost_trace;
  return rec;
}

inline BenchRecord baseline_record(const std::string& problem, const std::string& case_name,
                                   const std::string& method, std::uint64_t seed) {
  BenchRecord rec;
  rec.problem = problem;
  rec.case_name = case_name;
  rec.method = method;
  rec.seed = seed;
  rec.converged = true;
  return rec;
}

/// Weight from `grid` with the highest score; first wins on ties.
template <class Score>
double select_weight(const std::vector<double>& grid, Score&& score) {
  if (grid.empty()) throw ParameterError("weight grid is empty");
  double best_w = grid.front(), best = -kInf;
  for (double w : grid) {
    const double s = score(w);
    if (s > best) {
      best = s;
      best_w = w;
    }
  }
  return best_w;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Super-resolution: point scatterers on a dim floor, blurred and decimated

inline void bench_superres(const SrBenchConfig& c, std::uint64_t seed, BenchResult& out) {
  const Image psf = gaussian_psf(c.psf_size, c.psf_std);
  SolverConfig cfg;
  cfg.max_iter = c.max_iter;
  cfg.eps = c.eps;

  auto make = [&](std::uint64_t s) {
    SceneDescriptor d;
    d.kind = SceneKind::point_scatterers;
    d.size = c.size;
    d.seed = s;
    d.scatterers = c.scatterers;
    d.background = c.background;
    Image x = gen_phantom(d);
    SrObservation obs = degrade_sr(x, psf, c.factor, c.bsnr_db, 100 + s);
    return std::pair(std::move(x), std::move(obs));
  };

  // L1/TV weights tuned on a phantom outside the test set.
  const std::uint64_t held_out = seed + std::uint64_t(c.phantoms) + 1;
  const auto [hx, hobs] = make(held_out);
  auto tuned = [&](PenaltyKind kind) {
    return detail::select_weight(c.weights, [&](double w) {
      PenaltyConfig pen{kind, 1.0, w, 40};
      return psnr(hx, superresolve(hobs.low_res, psf, c.factor, pen, cfg, hobs.sigma).solution);
    });
  };
  const double w_l1 = tuned(PenaltyKind::l1);
  const double w_tv = tuned(PenaltyKind::tv);

  for (int i = 1; i <= c.phantoms; ++i) {
    const std::uint64_t s = seed + std::uint64_t(i);
    const auto [x, obs] = make(s);
    const std::string name = "phantom-" + std::to_string(i);

    detail::Stopwatch bw;
    BenchRecord bic = detail::baseline_record("superres", name, "bicubic", s);
    bic.metrics["psnr"] = psnr(x, bicubic_upsample(obs.low_res, c.factor));
    bic.wall_ms = bw.ms();
    out.records.push_back(std::move(bic));

    for (const PenaltyConfig& pen :
         {PenaltyConfig::cauchy(1.0), PenaltyConfig::l1(w_l1), PenaltyConfig::tv(w_tv)}) {
      detail::Stopwatch sw;
      const SolveResult r = superresolve(obs.low_res, psf, c.factor, pen, cfg, obs.sigma);
      detail::assert_auto_policy(r, pen.kind, out.policy_checks);
      BenchRecord rec = detail::solve_record("superres", name, pen, r, cfg, s);
      rec.metrics["psnr"] = psnr(x, r.solution);
      rec.metrics["ssim"] = ssim(x, r.solution);
      rec.metrics["sigma"] = obs.sigma;
      rec.wall_ms = sw.ms();
      out.records.push_back(std::move(rec));
    }
  }
}

// ---------------------------------------------------------------------------
// Despeckling: gamma and lognormal speckle at several look counts

inline void bench_despeckle(const DespeckleBenchConfig& c, std::uint64_t seed, BenchResult& out) {
  SolverConfig cfg;
  cfg.max_iter = c.max_iter;
  cfg.eps = c.eps;

  auto phantom = [&](std::uint64_t s) {
    SceneDescriptor d;
    d.kind = SceneKind::piecewise_smooth;
    d.size = c.size;
    d.seed = s;
    return gen_phantom(d);
  };
  auto speckle = [&](bool lognormal, double looks, Shape shape, std::uint64_t s) {
    return lognormal ? gen_lognormal_speckle(looks, shape, s) : gen_gamma_speckle(looks, shape, s);
  };

  const std::uint64_t held_out = seed + std::uint64_t(c.phantoms) + 1;
  const Image hx = phantom(held_out);
  const Image hy = apply_speckle(hx, gen_gamma_speckle(c.looks.front(), hx.shape(), 1000 + held_out));
  auto tuned = [&](PenaltyKind kind) {
    return detail::select_weight(c.weights, [&](double w) {
      return psnr(hx, despeckle(hy, PenaltyConfig{kind, 1.0, w, 40}, cfg, c.levels).image);
    });
  };
  const double w_l1 = tuned(PenaltyKind::l1);
  const double w_tv = tuned(PenaltyKind::tv);

  for (int i = 1; i <= c.phantoms; ++i) {
    const std::uint64_t s = seed + std::uint64_t(i);
    const Image x = phantom(s);
    for (const bool lognormal : {false, true})
      for (const double looks : c.looks) {
        const std::uint64_t ss = 1000 + 100 * s + std::uint64_t(looks) * 2 + (lognormal ? 1 : 0);
        const Image y = apply_speckle(x, speckle(lognormal, looks, x.shape(), ss));
        const std::string name = std::string(lognormal ? "lognormal" : "gamma") + "-L" +
                                 std::to_string(int(looks)) + "-phantom-" + std::to_string(i);

        BenchRecord noisy = detail::baseline_record("despeckle", name, "noisy", ss);
        noisy.metrics["psnr"] = psnr(x, y);
        noisy.metrics["smse"] = smse(x, y);
        noisy.metrics["ssim"] = ssim(x, y);
        out.records.push_back(std::move(noisy));

        for (const PenaltyConfig& pen :
             {PenaltyConfig::cauchy(1.0), PenaltyConfig::l1(w_l1), PenaltyConfig::tv(w_tv)}) {
          detail::Stopwatch sw;
          const DespeckleResult r = despeckle(y, pen, cfg, c.levels);
          BenchRecord rec = detail::baseline_record("despeckle", name, std::string(to_string(pen.kind)), ss);
          rec.weight = pen.kind == PenaltyKind::cauchy ? 0.0 : pen.weight;
          rec.eps = cfg.eps;
          rec.max_iter = cfg.max_iter;
          rec.converged = true;
          int converged_bands = 0;
          for (const auto& b : r.bands) {
            detail::assert_auto_policy(b, pen.kind, out.policy_checks);
            rec.iterations = std::max(rec.iterations, b.iterations);
            rec.converged = rec.converged && b.converged;
            converged_bands += b.converged ? 1 : 0;
          }
          // Bands share one noise level, so mu and gamma are common to all.
          if (!r.bands.empty()) {
            rec.gamma = r.bands.front().gamma;
            rec.mu = r.bands.front().mu;
            rec.cost_trace = r.bands.front().cost_trace;
          }
          rec.metrics["psnr"] = psnr(x, r.image);
          rec.metrics["smse"] = smse(x, r.image);
          rec.metrics["ssim"] = ssim(x, r.image);
          rec.metrics["log_sigma"] = r.sigma;
          rec.metrics["bands"] = double(r.bands.size());
          rec.metrics["bands_converged"] = double(converged_bands);
          rec.wall_ms = sw.ms();
          out.records.push_back(std::move(rec));
        }
      }
  }
}

// ---------------------------------------------------------------------------
// Image formation: sparse scene through a Gaussian sensing matrix

inline void bench_form(const FormBenchConfig& c, std::uint64_t seed, BenchResult& out) {
  SolverConfig cfg;
  cfg.max_iter = c.max_iter;
  cfg.eps = c.eps;
  const Shape shape{c.size, c.size};
  const auto m = std::size_t(std::lround(c.sampling * double(shape.size())));

  struct Case {
    Image x, y;
    LinearOperator phi;
    double sigma;
  };
  auto make = [&](std::uint64_t s) {
    SceneDescriptor d;
    d.kind = SceneKind::point_scatterers;
    d.size = c.size;
    d.seed = s;
    d.scatterers = c.scatterers;
    d.background = c.background;
    Case k{gen_phantom(d), {}, random_measurement_operator(m, shape, 500 + s), 0.0};
    const Image clean = k.phi.apply(k.x);
    k.sigma = std::sqrt(squared_norm(clean) / double(clean.size()) / std::pow(10.0, c.snr_db / 10.0));
    k.y = awgn(clean, k.sigma, 900 + s);
    return k;
  };

  const Case held = make(seed + std::uint64_t(c.seeds) + 1);
  const double w_l1 = detail::select_weight(c.weights, [&](double w) {
    return -rmse(held.x, form_image(held.y, held.phi, PenaltyConfig::l1(w), cfg, held.sigma).solution);
  });

  for (int i = 1; i <= c.seeds; ++i) {
    const std::uint64_t s = seed + std::uint64_t(i);
    const Case k = make(s);
    const std::string name = "seed-" + std::to_string(i);

    detail::Stopwatch bw;
    const Image mf = matched_filter_recon(k.y, k.phi);
    BenchRecord base = detail::baseline_record("form", name, "matched_filter", s);
    base.metrics["rmse"] = rmse(k.x, mf);
    base.metrics["re"] = 0.0;
    base.wall_ms = bw.ms();
    out.records.push_back(std::move(base));

    for (const PenaltyConfig& pen : {PenaltyConfig::cauchy(1.0), PenaltyConfig::l1(w_l1)}) {
      detail::Stopwatch sw;
      const SolveResult r = form_image(k.y, k.phi, pen, cfg, k.sigma);
      detail::assert_auto_policy(r, pen.kind, out.policy_checks);
      BenchRecord rec = detail::solve_record("form", name, pen, r, cfg, s);
      rec.metrics["rmse"] = rmse(k.x, r.solution);
      rec.metrics["re"] = relative_error(r.solution, mf);
      rec.metrics["sigma"] = k.sigma;
      rec.wall_ms = sw.ms();
      out.records.push_back(std::move(rec));
    }
  }
}

// ---------------------------------------------------------------------------
// Wake detection on ship-centred synthetic scenes

/// Scene i of the wake bench: random heading, the turbulent wake always
/// present, each arm present with probability `arm_probability`.
inline SceneDescriptor wake_bench_scene(const WakeBenchConfig& c, std::uint64_t s) {
  std::mt19937_64 rng(7000 + s);
  SceneDescriptor d;
  d.kind = SceneKind::wake_scene;
  d.size = c.size;
  d.seed = s;
  d.wake.turbulent_angle = detail::uniform(rng, 0.0, 180.0);
  d.wake.turbulent_offset = detail::uniform(rng, -c.offset_jitter, c.offset_jitter);
  d.wake.contrast[0] = detail::uniform(rng, c.contrast_lo, c.contrast_hi);
  for (std::size_t h = 1; h < 5; ++h) {
    const bool visible = detail::uniform(rng, 0.0, 1.0) < c.arm_probability;
    const double contrast = detail::uniform(rng, c.contrast_lo, c.contrast_hi);
    d.wake.contrast[h] = visible ? contrast : 0.0;
  }
  return d;
}

inline void bench_wake(const WakeBenchConfig& c, std::uint64_t seed, BenchResult& out) {
  const RadonGeometry geom = RadonGeometry::standard(c.size, c.angles);
  SolverConfig cfg;
  cfg.max_iter = c.max_iter;
  cfg.eps = c.eps;
  // One geometry for every scene: estimate ||C||^2 once.
  cfg.opnorm_sq = estimate_operator_norm(fbp_operator(geom, {c.size, c.size}), cfg.power_iters,
                                         cfg.power_tol, cfg.seed);
  const PenaltyConfig pen = PenaltyConfig::cauchy(1.0);

  ConfusionCounts total;
  double acc_sum = 0.0;
  for (int i = 1; i <= c.scenes; ++i) {
    const std::uint64_t s = seed + std::uint64_t(i);
    const SceneDescriptor d = wake_bench_scene(c, s);
    detail::Stopwatch sw;
    const WakeScene scene = gen_wake_scene(d);
    const WakeReport rep = detect_wakes(scene.image, geom, pen, cfg, c.detect);
    detail::assert_auto_policy(rep.solve, pen.kind, out.policy_checks);
    const ConfusionCounts cc = classify_detections(rep, scene.truth);
    total += cc;
    const double acc = double(cc.tp + cc.tn) / double(cc.total());
    acc_sum += acc;

    BenchRecord rec = detail::solve_record("wake", "scene-" + std::to_string(i), pen, rep.solve, cfg, s);
    rec.metrics["tp"] = double(cc.tp);
    rec.metrics["tn"] = double(cc.tn);
    rec.metrics["fp"] = double(cc.fp);
    rec.metrics["fn"] = double(cc.fn);
    rec.metrics["accuracy"] = acc;
    for (std::size_t h = 0; h < 5; ++h) {
      const std::string k(to_string(kWakeKinds[h]));
      rec.metrics["score_" + k] = rep.hypotheses[h].score;
      rec.metrics["line_z_" + k] = rep.hypotheses[h].line_z;
      rec.metrics["truth_" + k] = scene.truth[h] ? 1.0 : 0.0;
    }
    rec.wall_ms = sw.ms();
    out.records.push_back(std::move(rec));
  }

  out.wake_counts = total;
  out.wake_mean_accuracy = c.scenes > 0 ? acc_sum / double(c.scenes) : 0.0;
  if (total.total() > 0) {
    const DetectionMetrics dm = detection_metrics(total);
    BenchRecord sum = detail::baseline_record("wake", "total", "cauchy", seed);
    sum.metrics = {{"tp", double(total.tp)},    {"tn", double(total.tn)},
                   {"fp", double(total.fp)},    {"fn", double(total.fn)},
                   {"accuracy", dm.accuracy},   {"mean_accuracy", out.wake_mean_accuracy},
                   {"f1", dm.f1},               {"lr_plus", dm.lr_plus},
                   {"youden_j", dm.youden_j},   {"sensitivity", dm.sensitivity},
                   {"specificity", dm.specificity}};
    out.records.push_back(std::move(sum));
  }
}

enum class BenchSuite { superres, despeckle, form, wake };

inline BenchResult run_bench(const BenchConfig& c, const std::vector<BenchSuite>& suites = {
                                 BenchSuite::superres, BenchSuite::despeckle, BenchSuite::form,
                                 BenchSuite::wake}) {
  BenchResult out;
  for (BenchSuite s : suites) {
    switch (s) {
      case BenchSuite::superres: bench_superres(c.sr, c.seed, out); break;
      case BenchSuite::despeckle: bench_despeckle(c.despeckle, c.seed, out); break;
      case BenchSuite::form: bench_form(c.form, c.seed, out); break;
      case BenchSuite::wake: bench_wake(c.wake, c.seed, out); break;
    }
  }
  return out;
}

} // namespace cps
