#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "cps/errors.hpp"
#include "cps/image.hpp"
#include "cps/operators.hpp"
#include "cps/penalty.hpp"

namespace cps {

/// Largest eigenvalue of A^T A by power iteration from a seeded Gaussian
/// start. Stops once the Rayleigh quotient changes by less than `tol`
/// (relative) or after `iters` steps.
inline double estimate_operator_norm(const LinearOperator& op, int iters = 1000,
                                     double tol = 1e-10, std::uint64_t seed = 0) {
  if (iters < 1) throw ParameterError("power iteration needs at least one step");
  std::mt19937_64 rng(seed);
  Image x = random_image(op.in_shape(), rng);
  x *= 1.0 / norm(x);
  double lambda = 0.0;
  for (int i = 0; i < iters; ++i) {
    Image v = op.adjoint(op.apply(x));
    const double next = dot(x, v);
    const double n = norm(v);
    if (n == 0.0) return 0.0;
    x = v * (1.0 / n);
    const bool done = i > 0 && std::abs(next - lambda) <= tol * std::abs(next);
    lambda = next;
    if (done) break;
  }
  return lambda;
}

/// Gradient Lipschitz constant of ||y - Ax||^2 / (2 sigma^2).
inline double lipschitz_constant(double opnorm_sq, double sigma) {
  if (!(opnorm_sq > 0.0) || !(sigma > 0.0))
    throw ParameterError("lipschitz_constant needs positive operator norm and sigma");
  return opnorm_sq / (sigma * sigma);
}

/// True when each forward-backward subproblem is strictly convex: gamma >= sqrt(mu)/2.
inline bool check_convexity_condition(double gamma, double mu) {
  return gamma >= std::sqrt(mu) / 2.0;
}

/// Sufficient condition for forward-backward to decrease the cost at every
/// step with a Cauchy penalty: 2/mu > L + 1/(4 gamma^2). The penalty is
/// 1/(4 gamma^2)-weakly convex, so at gamma = sqrt(mu)/2 this reduces to mu < 1/L.
inline bool check_descent_condition(double gamma, double mu, double lipschitz) {
  return 2.0 / mu > lipschitz + 1.0 / (4.0 * gamma * gamma);
}

/// Step used when mu is not given: 90% of the largest step with guaranteed
/// descent. That bound is 2/L for the convex penalties and 1/L for Cauchy
/// with gamma = sqrt(mu)/2.
inline double auto_step(PenaltyKind kind, double lipschitz) {
  return (kind == PenaltyKind::cauchy ? 0.9 : 1.8) / lipschitz;
}

/// Y = A X + N with Gaussian noise of standard deviation sigma.
struct InverseProblem {
  Image observation;
  LinearOperator forward;
  double sigma = 1.0;
  PenaltyConfig penalty;

  void validate() const {
    if (forward.out_shape() != observation.shape())
      throw ContractError("observation " + to_string(observation.shape()) +
                          " does not match operator output " + to_string(forward.out_shape()));
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ParameterError("sigma must be positive");
    if (!all_finite(observation)) throw InputError("observation contains non-finite values");
    penalty.validate();
  }
};

enum class GammaPolicy { auto_from_mu, explicit_value };
enum class InitPolicy { zeros, adjoint_of_data };

struct SolverConfig {
  std::optional<double> mu;  // empty: auto_step()
  GammaPolicy gamma_policy = GammaPolicy::auto_from_mu;
  double eps = 1e-3;
  int max_iter = 500;
  InitPolicy x0 = InitPolicy::adjoint_of_data;
  std::uint64_t seed = 0;  // power-iteration start
  int power_iters = 500;
  double power_tol = 1e-8;
  std::optional<double> opnorm_sq;  // known ||A||^2; skips the power iteration
  std::function<void(int, const Image&)> observer;  // called after each iteration
};

struct SolveResult {
  Image solution;
  std::vector<double> cost_trace;
  std::vector<double> relchange_trace;
  int iterations = 0;
  bool converged = false;

  // Resolved parameters.
  double mu = 0.0;
  double gamma = 0.0;
  double opnorm_sq = 0.0;
  double lipschitz = 0.0;
  std::vector<std::string> warnings;
};

/// ||Y - AX||^2 / (2 sigma^2) + penalty(X).
inline double problem_cost(const InverseProblem& p, const Image& x, const PenaltyConfig& pen) {
  const Image r = p.forward.apply(x) - p.observation;
  return squared_norm(r) / (2.0 * p.sigma * p.sigma) + penalty_value(x, pen);
}

/// Forward-backward splitting: gradient step on the data term, proximal step
/// on the penalty. With auto policies mu = auto_step() and, for the Cauchy
/// penalty, gamma = sqrt(mu)/2 so every subproblem stays convex and the cost
/// decreases monotonically.
inline SolveResult cps_solve(const InverseProblem& problem, const SolverConfig& cfg) {
  problem.validate();
  if (!(cfg.eps > 0.0)) throw ParameterError("eps must be positive");
  if (cfg.max_iter < 1) throw ParameterError("max_iter must be >= 1");

  SolveResult res;
  const LinearOperator& A = problem.forward;
  const double sigma2 = problem.sigma * problem.sigma;

  res.opnorm_sq = cfg.opnorm_sq ? *cfg.opnorm_sq
                                 : estimate_operator_norm(A, cfg.power_iters, cfg.power_tol, cfg.seed);
  if (!(res.opnorm_sq > 0.0)) throw ParameterError("forward operator has zero norm");
  res.lipschitz = lipschitz_constant(res.opnorm_sq, problem.sigma);

  if (cfg.mu) {
    if (!(*cfg.mu > 0.0)) throw ParameterError("mu must be positive");
    res.mu = *cfg.mu;
    if (res.mu * res.lipschitz >= 2.0)
      res.warnings.push_back("step size mu = " + std::to_string(res.mu) +
                             " is outside (0, 2/L) with L = " + std::to_string(res.lipschitz));
  } else {
    res.mu = auto_step(problem.penalty.kind, res.lipschitz);
  }

  PenaltyConfig pen = problem.penalty;
  if (pen.kind == PenaltyKind::cauchy) {
    if (cfg.gamma_policy == GammaPolicy::auto_from_mu) {
      pen.gamma = std::sqrt(res.mu) / 2.0;
    } else if (!check_convexity_condition(pen.gamma, res.mu)) {
      res.warnings.push_back("gamma = " + std::to_string(pen.gamma) + " < sqrt(mu)/2 = " +
                             std::to_string(std::sqrt(res.mu) / 2.0) +
                             "; subproblems are not guaranteed convex");
    }
    if (!check_descent_condition(pen.gamma, res.mu, res.lipschitz))
      res.warnings.push_back("mu = " + std::to_string(res.mu) + ", gamma = " + std::to_string(pen.gamma) +
                             " violate 2/mu > L + 1/(4 gamma^2); the iteration may oscillate");
    res.gamma = pen.gamma;
  }

  Image x = cfg.x0 == InitPolicy::zeros
                ? Image(A.in_shape())
                : A.adjoint(problem.observation) * (1.0 / res.opnorm_sq);

  for (int i = 0; i < cfg.max_iter; ++i) {
    const Image residual = A.apply(x) - problem.observation;
    Image u = A.adjoint(residual);
    for (std::size_t k = 0; k < u.size(); ++k) u[k] = x[k] - res.mu * u[k] / sigma2;
    Image next = penalty_prox(u, pen, res.mu);
    if (!all_finite(next))
      throw DivergenceError("non-finite iterate at iteration " + std::to_string(i + 1), i + 1);

    const double step = norm(next - x);
    const double base = norm(x);
    const double rel = step == 0.0 ? 0.0 : (base > 0.0 ? step / base : INFINITY);

    x = std::move(next);
    res.iterations = i + 1;
    res.relchange_trace.push_back(rel);
    res.cost_trace.push_back(problem_cost(problem, x, pen));
    if (cfg.observer) cfg.observer(res.iterations, x);
    if (rel <= cfg.eps) {
      res.converged = true;
      break;
    }
  }
  res.solution = std::move(x);
  return res;
}

} // namespace cps
