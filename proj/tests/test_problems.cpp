#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cps/metrics.hpp"
#include "cps/problems.hpp"
#include "cps/simulate.hpp"

using namespace cps;

namespace {

Image smooth_scene(std::uint64_t seed, std::size_t n = 64) {
  SceneDescriptor d;
  d.seed = seed;
  d.size = n;
  return gen_phantom(d);
}

TEST(Superresolve, FactorOneDeltaPsfIsDenoising) {
  const Image y = smooth_scene(1, 32);
  SolverConfig cfg;
  cfg.max_iter = 50;
  const SolveResult flat = superresolve(y, delta_psf(), 1, PenaltyConfig::l1(0.0), cfg, 0.1);
  EXPECT_LT(norm(flat.solution - y), 1e-12 * norm(y));
  const SolveResult c = superresolve(y, delta_psf(), 1, PenaltyConfig::cauchy(1.0), cfg, 1e-3);
  EXPECT_LT(rmse(y, c.solution), 1e-4);
}

TEST(Superresolve, OutputShapeAndImprovesOnBicubicForSparseScene) {
  SceneDescriptor d;
  d.kind = SceneKind::point_scatterers;
  d.size = 64;
  d.seed = 2;
  d.background = 0.01;
  const Image x = gen_phantom(d);
  const Image psf = gaussian_psf(5, 2.0);
  const SrObservation obs = degrade_sr(x, psf, 2, 30.0, 3);
  SolverConfig cfg;
  cfg.max_iter = 300;
  const SolveResult r = superresolve(obs.low_res, psf, 2, PenaltyConfig::cauchy(1.0), cfg, obs.sigma);
  EXPECT_EQ(r.solution.shape(), x.shape());
  EXPECT_GT(psnr(x, r.solution), psnr(x, bicubic_upsample(obs.low_res, 2)));
  EXPECT_THROW(superresolve(obs.low_res, psf, 0, PenaltyConfig::cauchy(1.0), cfg, obs.sigma), ParameterError);
}

TEST(Bicubic, ReproducesConstantsAndRamps) {
  const Image c = bicubic_upsample(Image(5, 7, 0.4), 3);
  EXPECT_EQ(c.shape(), (Shape{15, 21}));
  for (double v : c) EXPECT_NEAR(v, 0.4, 1e-14);
  Image ramp(6, 6);
  for (std::size_t r = 0; r < 6; ++r)
    for (std::size_t k = 0; k < 6; ++k) ramp(r, k) = 2.0 * double(r) - 0.5 * double(k);
  const Image up = bicubic_upsample(ramp, 2);
  for (std::size_t r = 0; r < up.rows(); ++r)
    for (std::size_t k = 0; k < up.cols(); ++k)
      EXPECT_NEAR(up(r, k), 2.0 * double(r) / 2.0 - 0.5 * double(k) / 2.0, 1e-12);
  EXPECT_EQ(bicubic_upsample(ramp, 1), ramp);
}

TEST(Formation, IdentityOperatorAndBaselines) {
  Image y(6, 1);
  for (std::size_t i = 0; i < 6; ++i) y[i] = double(i) - 2.5;
  const auto I = identity_operator(y.shape());
  EXPECT_EQ(matched_filter_recon(y, I), y);
  SolverConfig cfg;
  const SolveResult r = form_image(y, I, PenaltyConfig::l1(0.0), cfg, 1.0);
  EXPECT_LT(norm(r.solution - y), 1e-12);

  const auto M = matrix_operator(DenseMatrix::from_rows({{1, 2}, {3, 4}}));
  Image z(2, 1);
  z[0] = 1.0;
  z[1] = 1.0;
  const Image mf = matched_filter_recon(z, M);
  EXPECT_EQ(mf[0], 4.0);
  EXPECT_EQ(mf[1], 6.0);
}

TEST(RelativeError, Examples) {
  const Image mf(3, 3, 1.0);
  EXPECT_EQ(relative_error(mf, mf), 0.0);
  EXPECT_NEAR(relative_error(mf * std::sqrt(2.0), mf), 3.0103, 1e-4);
  EXPECT_NEAR(relative_error(mf * 0.1, mf), 20.0, 1e-12);
  EXPECT_TRUE(std::isinf(relative_error(Image(3, 3), mf)));
  EXPECT_THROW(relative_error(mf, Image(3, 3)), DomainError);
}

TEST(NoiseSigma, RecoversWhiteNoiseLevel) {
  const Image n = awgn(Image(128, 128, 0.5), 0.1, 12);
  EXPECT_NEAR(estimate_noise_sigma(n), 0.1, 0.01);
  EXPECT_NEAR(estimate_noise_sigma(Image(9, 9, 3.0)), 0.0, 1e-12);
  EXPECT_THROW(estimate_noise_sigma(Image(7, 7)), ParameterError);
}

TEST(Despeckle, SpeckleFreeInputPassesThrough) {
  const Image x = smooth_scene(3, 64);
  const DespeckleResult r = despeckle(x, PenaltyConfig::cauchy(1.0), SolverConfig{});
  EXPECT_LT(rmse(x, r.image), 0.02 * (max_value(x) - min_value(x)));
}

TEST(Despeckle, ScalingPositivityAndErrors) {
  const Image x = smooth_scene(4, 48);
  const Image y = apply_speckle(x, gen_gamma_speckle(5.0, x.shape(), 8));
  SolverConfig cfg;
  cfg.max_iter = 100;
  const DespeckleResult a = despeckle(y, PenaltyConfig::cauchy(1.0), cfg);
  const DespeckleResult b = despeckle(y * 3.5, PenaltyConfig::cauchy(1.0), cfg);
  EXPECT_EQ(a.image.shape(), y.shape());
  EXPECT_GT(min_value(a.image), 0.0);
  EXPECT_EQ(a.bands.size(), 9u);
  EXPECT_LT(norm(b.image - a.image * 3.5), 1e-9 * norm(b.image));
  EXPECT_GT(psnr(x, a.image, 1.0), psnr(x, y, 1.0));

  Image bad = y;
  bad[3] = 0.0;
  bad[7] = -1.0;
  try {
    despeckle(bad, PenaltyConfig::cauchy(1.0), cfg);
    FAIL() << "expected a domain error";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find('2'), std::string::npos);
  }
  EXPECT_THROW(despeckle(y, PenaltyConfig::cauchy(1.0), cfg, 3, 0.0), ParameterError);
  EXPECT_THROW(despeckle(y, PenaltyConfig::cauchy(1.0), cfg, 0), ParameterError);
}

SceneDescriptor wake_descriptor(std::uint64_t seed, std::array<double, 5> contrast) {
  SceneDescriptor d;
  d.kind = SceneKind::wake_scene;
  d.size = 64;
  d.seed = seed;
  d.wake.contrast = contrast;
  d.wake.turbulent_angle = 40.0 + 7.0 * double(seed % 10);
  return d;
}

struct WakeRun {
  WakeReport report;
  WakeFlags truth;
};

WakeRun run_wake(const SceneDescriptor& d) {
  const WakeScene s = gen_wake_scene(d);
  const RadonGeometry geom = RadonGeometry::standard(d.size, 90);
  static const double opnorm_sq = estimate_operator_norm(fbp_operator(geom, {d.size, d.size}));
  SolverConfig cfg;
  cfg.max_iter = 100;
  cfg.opnorm_sq = opnorm_sq;
  return {detect_wakes(s.image, geom, PenaltyConfig::cauchy(1.0), cfg), s.truth};
}

TEST(DetectWakes, HypothesisLayout) {
  const WakeRun w = run_wake(wake_descriptor(1, {0.7, 0.0, 0.0, 0.0, 0.0}));
  const auto& h = w.report.hypotheses;
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(h[i].kind, kWakeKinds[i]);
  EXPECT_EQ(h[0].polarity, Polarity::dark);
  for (std::size_t i = 1; i < 5; ++i) EXPECT_EQ(h[i].polarity, Polarity::bright);
  for (const auto& x : h) {
    EXPECT_GE(x.theta, 0.0);
    EXPECT_LT(x.theta, 180.0);
  }
  EXPECT_LT(h[0].score, 0.0);
  EXPECT_TRUE(h[0].decided_visible);
}

TEST(DetectWakes, PureNoiseMostlyInvisible) {
  int all_invisible = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const WakeRun w = run_wake(wake_descriptor(100 + s, {0.0, 0.0, 0.0, 0.0, 0.0}));
    EXPECT_EQ(w.truth, WakeFlags{});
    const WakeFlags v = w.report.visibility();
    all_invisible += std::none_of(v.begin(), v.end(), [](bool b) { return b; });
  }
  EXPECT_GE(all_invisible, 16);
}

TEST(DetectWakes, TurbulentPlusOneArm) {
  const WakeRun w = run_wake(wake_descriptor(3, {0.7, 0.0, 0.0, 0.8, 0.0}));
  EXPECT_TRUE(w.report.hypotheses[0].decided_visible);
  EXPECT_TRUE(w.report.hypotheses[3].decided_visible);
}

TEST(DetectWakes, RejectsBadFalseAlarmRate) {
  DetectConfig det;
  det.false_alarm = 1.0;
  EXPECT_THROW(detect_wakes(Image(32, 32, 1.0), RadonGeometry::standard(32, 10), PenaltyConfig::cauchy(1.0),
                            SolverConfig{}, det),
               ParameterError);
}

TEST(ClassifyDetections, Accounting) {
  const WakeFlags truth{true, true, false, false, true};
  const WakeFlags decided{true, false, true, false, true};
  EXPECT_EQ(classify_detections(decided, truth), (ConfusionCounts{2, 1, 1, 1}));
  ConfusionCounts total;
  std::mt19937_64 rng(1);
  for (int scene = 0; scene < 11; ++scene) {
    WakeFlags a{}, b{};
    for (std::size_t i = 0; i < 5; ++i) {
      a[i] = rng() & 1;
      b[i] = rng() & 1;
    }
    total += classify_detections(a, b);
  }
  EXPECT_EQ(total.total(), 55);
}

} // namespace
