#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "cps/operators.hpp"
#include "cps/solver.hpp"

using namespace cps;

namespace {

void dense_matrix(const LinearOperator& op, Eigen::MatrixXd& M) {
  const std::size_t n = op.in_shape().size(), m = op.out_shape().size();
  M.resize(Eigen::Index(m), Eigen::Index(n));
  Image e(op.in_shape());
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = 1.0;
    const Image col = op.apply(e);
    for (std::size_t i = 0; i < m; ++i) M(Eigen::Index(i), Eigen::Index(j)) = col[i];
    e[j] = 0.0;
  }
}

double dense_norm_sq(const LinearOperator& op) {
  Eigen::MatrixXd M;
  dense_matrix(op, M);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M.transpose() * M);
  return es.eigenvalues().maxCoeff();
}

TEST(OperatorNorm, IdentityAndScaling) {
  EXPECT_NEAR(estimate_operator_norm(identity_operator({5, 7})), 1.0, 1e-6);
  EXPECT_NEAR(estimate_operator_norm(scaling_operator({4, 4}, 3.0)), 9.0, 1e-6);
  EXPECT_THROW(estimate_operator_norm(identity_operator({2, 2}), 0), ParameterError);
}

TEST(OperatorNorm, BlurMatchesDenseEigenOracle) {
  const auto H = blur_operator(gaussian_psf(3, 0.8), {8, 8});
  EXPECT_NEAR(estimate_operator_norm(H, 5000, 1e-14), dense_norm_sq(H), 1e-4);
  const auto DH = compose(downsample_operator(2, {8, 8}), H);
  EXPECT_NEAR(estimate_operator_norm(DH, 5000, 1e-14), dense_norm_sq(DH), 1e-4);
}

TEST(Lipschitz, Examples) {
  EXPECT_DOUBLE_EQ(lipschitz_constant(1.0, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(lipschitz_constant(4.0, 2.0), 1.0);
  EXPECT_DOUBLE_EQ(lipschitz_constant(2.25, 0.5), 9.0);
  EXPECT_THROW(lipschitz_constant(0.0, 1.0), ParameterError);
  EXPECT_THROW(lipschitz_constant(1.0, -1.0), ParameterError);
}

TEST(Conditions, ConvexityGate) {
  EXPECT_TRUE(check_convexity_condition(0.5, 1.0));
  EXPECT_FALSE(check_convexity_condition(0.9, 4.0));
  EXPECT_TRUE(check_convexity_condition(10.0, 0.01));
}

TEST(Conditions, DescentAndAutoStep) {
  // At gamma = sqrt(mu)/2 the descent condition is mu < 1/L.
  EXPECT_TRUE(check_descent_condition(std::sqrt(0.9) / 2.0, 0.9, 1.0));
  EXPECT_FALSE(check_descent_condition(std::sqrt(1.8) / 2.0, 1.8, 1.0));
  EXPECT_DOUBLE_EQ(auto_step(PenaltyKind::cauchy, 2.0), 0.45);
  EXPECT_DOUBLE_EQ(auto_step(PenaltyKind::l1, 2.0), 0.9);
  EXPECT_DOUBLE_EQ(auto_step(PenaltyKind::tv, 2.0), 0.9);
}

InverseProblem denoise_problem(const Image& y, double sigma, PenaltyConfig pen) {
  return {y, identity_operator(y.shape()), sigma, pen};
}

TEST(Solve, ZeroDataIsAFixedPoint) {
  SolverConfig cfg;
  cfg.x0 = InitPolicy::zeros;
  const SolveResult r = cps_solve(denoise_problem(Image(4, 4), 1.0, PenaltyConfig::cauchy(1.0)), cfg);
  EXPECT_EQ(r.solution, Image(4, 4));
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.iterations, 1);
}

TEST(Solve, ScalarFixedPointMatchesRootOracle) {
  // Root of (x - 1) + 2x / (0.25 + x^2) = 0, from an independent root finder.
  SolverConfig cfg;
  cfg.mu = 0.9;
  cfg.gamma_policy = GammaPolicy::explicit_value;
  cfg.eps = 1e-14;
  cfg.max_iter = 100000;
  const SolveResult r = cps_solve(denoise_problem(Image(1, 1, 1.0), 1.0, PenaltyConfig::cauchy(0.5)), cfg);
  EXPECT_TRUE(r.converged);
  EXPECT_TRUE(r.warnings.empty());
  EXPECT_NEAR(r.solution[0], 0.11643492089245613, 1e-6);
}

class DescentProperty : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(DescentProperty, AutoPolicyCostNonIncreasingAndStationary) {
  std::mt19937_64 rng(GetParam());
  std::normal_distribution<double> n;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image clean(16, 16);
  for (auto& v : clean) v = u(rng) < 0.1 ? 3.0 * n(rng) : 0.0;
  const double sigma = 0.05 + 0.5 * u(rng);
  Image y = clean;
  for (auto& v : y) v += sigma * n(rng);

  SolverConfig cfg;
  cfg.eps = 1e-12;
  cfg.max_iter = 20000;
  const InverseProblem p = denoise_problem(y, sigma, PenaltyConfig::cauchy(1.0));
  const SolveResult r = cps_solve(p, cfg);
  ASSERT_TRUE(check_descent_condition(r.gamma, r.mu, r.lipschitz));
  ASSERT_TRUE(check_convexity_condition(r.gamma, r.mu));
  EXPECT_TRUE(r.warnings.empty());
  for (std::size_t i = 1; i < r.cost_trace.size(); ++i) EXPECT_LE(r.cost_trace[i], r.cost_trace[i - 1] + 1e-12);

  ASSERT_TRUE(r.converged);
  const Image& x = r.solution;
  double grad2 = 0.0;
  const double g2 = r.gamma * r.gamma;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double g = (x[i] - y[i]) / (sigma * sigma) + 2.0 * x[i] / (g2 + x[i] * x[i]);
    grad2 += g * g;
  }
  EXPECT_LE(std::sqrt(grad2), 1e-4 * (1.0 + norm(x)));
}

TEST_P(DescentProperty, ConvexPenaltiesNonIncreasing) {
  std::mt19937_64 rng(GetParam() + 100);
  std::normal_distribution<double> n;
  Image y(12, 12);
  for (auto& v : y) v = n(rng);
  const auto A = blur_operator(gaussian_psf(3, 1.0), y.shape());
  for (const PenaltyConfig& pen : {PenaltyConfig::l1(0.5), PenaltyConfig::tv(0.5, 200)}) {
    SolverConfig cfg;
    cfg.max_iter = 200;
    const SolveResult r = cps_solve({y, A, 0.5, pen}, cfg);
    EXPECT_LT(r.mu * r.lipschitz, 2.0);
    for (std::size_t i = 1; i < r.cost_trace.size(); ++i)
      EXPECT_LE(r.cost_trace[i], r.cost_trace[i - 1] + 1e-9 * std::abs(r.cost_trace[i - 1]))
          << to_string(pen.kind) << " iteration " << i;
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, DescentProperty, ::testing::Values(1u, 2u, 3u, 4u, 5u));

// A step of 1.8/L with gamma = sqrt(mu)/2 breaks descent: the iteration
// settles into a 2-cycle whose cost goes up on every other step.
TEST(Solve, LargeStepTwoCycleRegression) {
  SolverConfig cfg;
  cfg.mu = 1.8;
  cfg.max_iter = 200;
  const SolveResult r = cps_solve(denoise_problem(Image(1, 1, 2.5), 1.0, PenaltyConfig::cauchy(1.0)), cfg);
  EXPECT_FALSE(r.converged);
  ASSERT_FALSE(r.warnings.empty());
  const auto n = r.cost_trace.size();
  EXPECT_GT(r.cost_trace[n - 1], r.cost_trace[n - 2]);
  EXPECT_NEAR(std::min(r.cost_trace[n - 1], r.cost_trace[n - 2]), 2.28374249729, 1e-8);
  EXPECT_NEAR(std::max(r.cost_trace[n - 1], r.cost_trace[n - 2]), 3.08114975552, 1e-8);
}

TEST(Solve, WarnsOnExplicitGammaBelowBound) {
  SolverConfig cfg;
  cfg.mu = 0.5;
  cfg.gamma_policy = GammaPolicy::explicit_value;
  cfg.max_iter = 5;
  const SolveResult r = cps_solve(denoise_problem(Image(2, 2, 1.0), 1.0, PenaltyConfig::cauchy(0.1)), cfg);
  ASSERT_GE(r.warnings.size(), 1u);
  EXPECT_NE(r.warnings.front().find("convex"), std::string::npos);
}

TEST(Solve, DivergenceNamesIteration) {
  SolverConfig cfg;
  cfg.mu = 1e300;
  cfg.max_iter = 50;
  cfg.x0 = InitPolicy::zeros;
  try {
    cps_solve(denoise_problem(Image(2, 2, 1.0), 1.0, PenaltyConfig::l1(0.0)), cfg);
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_GE(e.iteration(), 1);
    EXPECT_NE(std::string(e.what()).find(std::to_string(e.iteration())), std::string::npos);
  }
}

TEST(Solve, ContractsAndBookkeeping) {
  SolverConfig cfg;
  cfg.max_iter = 7;
  cfg.eps = 1e-30;
  InverseProblem bad{Image(3, 3), identity_operator({4, 4}), 1.0, PenaltyConfig::cauchy(1.0)};
  EXPECT_THROW(cps_solve(bad, cfg), ContractError);
  InverseProblem nosigma{Image(4, 4), identity_operator({4, 4}), 0.0, PenaltyConfig::cauchy(1.0)};
  EXPECT_THROW(cps_solve(nosigma, cfg), ParameterError);

  std::mt19937_64 rng(3);
  const InverseProblem p = denoise_problem(random_image({6, 6}, rng), 0.3, PenaltyConfig::cauchy(1.0));
  const SolveResult a = cps_solve(p, cfg);
  const SolveResult b = cps_solve(p, cfg);
  EXPECT_EQ(a.iterations, 7);
  EXPECT_FALSE(a.converged);
  EXPECT_EQ(a.relchange_trace.size(), std::size_t(a.iterations));
  EXPECT_EQ(a.cost_trace, b.cost_trace);
  EXPECT_EQ(a.relchange_trace, b.relchange_trace);
  EXPECT_EQ(a.solution, b.solution);
}

TEST(Solve, OpnormOverrideSkipsPowerIteration) {
  std::mt19937_64 rng(8);
  const InverseProblem p = denoise_problem(random_image({5, 5}, rng), 1.0, PenaltyConfig::cauchy(1.0));
  SolverConfig cfg;
  cfg.opnorm_sq = 1.0;
  int calls = 0;
  cfg.observer = [&](int, const Image&) { ++calls; };
  const SolveResult r = cps_solve(p, cfg);
  EXPECT_EQ(r.opnorm_sq, 1.0);
  EXPECT_DOUBLE_EQ(r.mu, 0.9);
  EXPECT_DOUBLE_EQ(r.gamma, std::sqrt(0.9) / 2.0);
  EXPECT_EQ(calls, r.iterations);
}

} // namespace
