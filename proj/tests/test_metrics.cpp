#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cps/metrics.hpp"
#include "cps/operators.hpp"

using namespace cps;

namespace {

TEST(DetectionMetrics, WorkedCounts) {
  const DetectionMetrics m = detection_metrics({38, 46, 10, 8});
  EXPECT_NEAR(m.sensitivity, 38.0 / 46.0, 1e-15);
  EXPECT_NEAR(m.specificity, 46.0 / 56.0, 1e-15);
  EXPECT_NEAR(m.accuracy, 84.0 / 102.0, 1e-15);
  EXPECT_NEAR(m.lr_plus, 4.63, 0.005);
  EXPECT_NEAR(m.f1, 0.81, 0.005);
  EXPECT_NEAR(m.youden_j, 0.65, 0.005);
}

TEST(DetectionMetrics, PerfectAndCoinFlip) {
  const DetectionMetrics p = detection_metrics({10, 10, 0, 0});
  EXPECT_EQ(p.accuracy, 1.0);
  EXPECT_EQ(p.f1, 1.0);
  EXPECT_EQ(p.youden_j, 1.0);
  EXPECT_TRUE(std::isinf(p.lr_plus) && p.lr_plus > 0);

  const DetectionMetrics c = detection_metrics({25, 25, 25, 25});
  EXPECT_EQ(c.accuracy, 0.5);
  EXPECT_EQ(c.lr_plus, 1.0);
  EXPECT_EQ(c.youden_j, 0.0);
}

TEST(DetectionMetrics, UndefinedAndInvalid) {
  const DetectionMetrics m = detection_metrics({0, 5, 1, 0});
  EXPECT_TRUE(std::isnan(m.sensitivity));
  EXPECT_TRUE(std::isnan(m.lr_plus));
  EXPECT_TRUE(std::isnan(m.youden_j));
  EXPECT_THROW(detection_metrics({0, 0, 0, 0}), DomainError);
  EXPECT_THROW(detection_metrics({-1, 2, 0, 0}), DomainError);
}

TEST(DetectionMetrics, CountsAccumulate) {
  ConfusionCounts a{1, 2, 3, 4};
  a += {4, 3, 2, 1};
  EXPECT_EQ(a, (ConfusionCounts{5, 5, 5, 5}));
  EXPECT_EQ(a.total(), 20);
}

TEST(ImageMetrics, HandComputed) {
  const Image ref(4, 4, 1.0);
  const Image est(4, 4, 0.9);
  EXPECT_NEAR(rmse(ref, est), 0.1, 1e-15);
  EXPECT_NEAR(psnr(ref, est), 20.0, 1e-12);
  EXPECT_NEAR(psnr(ref, est, 2.0), 20.0 + 20.0 * std::log10(2.0), 1e-12);
  EXPECT_NEAR(smse(ref, est), 20.0, 1e-12);
  EXPECT_TRUE(std::isinf(psnr(ref, ref)));
  EXPECT_TRUE(std::isinf(smse(ref, ref)));
  EXPECT_THROW(smse(Image(2, 2), est), ContractError);
  EXPECT_THROW(smse(Image(4, 4), est), DomainError);
  EXPECT_THROW(psnr(Image(4, 4), est), ParameterError);
  EXPECT_NEAR(smse(ref * 7.0, est * 7.0), smse(ref, est), 1e-12);
}

TEST(Ssim, Properties) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image ref(24, 24);
  for (auto& v : ref) v = u(rng);
  EXPECT_NEAR(ssim(ref, ref), 1.0, 1e-12);
  Image noisy = ref, noisier = ref;
  std::normal_distribution<double> n;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double e = n(rng);
    noisy[i] += 0.05 * e;
    noisier[i] += 0.3 * e;
  }
  const double a = ssim(ref, noisy), b = ssim(ref, noisier);
  EXPECT_LT(a, 1.0);
  EXPECT_LT(b, a);
  EXPECT_NEAR(ssim(noisy, ref, 1.0), ssim(ref, noisy, 1.0), 1e-12);
  EXPECT_THROW(ssim(Image(10, 10, 1.0), Image(10, 10, 1.0)), ParameterError);
}

} // namespace
