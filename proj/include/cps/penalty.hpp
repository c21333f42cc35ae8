#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <string_view>

#include "cps/errors.hpp"
#include "cps/image.hpp"

namespace cps {

enum class PenaltyKind { cauchy, l1, tv };

inline std::string_view to_string(PenaltyKind k) {
  switch (k) {
    case PenaltyKind::cauchy: return "cauchy";
    case PenaltyKind::l1: return "l1";
    case PenaltyKind::tv: return "tv";
  }
  return "unknown";
}

inline PenaltyKind parse_penalty_kind(std::string_view s) {
  if (s == "cauchy") return PenaltyKind::cauchy;
  if (s == "l1") return PenaltyKind::l1;
  if (s == "tv") return PenaltyKind::tv;
  throw ParameterError("unknown penalty kind '" + std::string(s) + "'");
}

/// Penalty selection. `weight` scales L1/TV and is ignored for Cauchy, whose
/// balance against the data term comes from the noise level alone.
struct PenaltyConfig {
  PenaltyKind kind = PenaltyKind::cauchy;
  double gamma = 1.0;
  double weight = 0.0;
  int tv_inner_iters = 40;

  void validate() const {
    if (kind == PenaltyKind::cauchy && !(gamma > 0.0))
      throw ParameterError("cauchy penalty requires gamma > 0");
    if (!(weight >= 0.0)) throw ParameterError("penalty weight must be non-negative");
    if (tv_inner_iters < 1) throw ParameterError("tv_inner_iters must be >= 1");
  }

  static PenaltyConfig cauchy(double gamma) { return {PenaltyKind::cauchy, gamma, 0.0, 40}; }
  static PenaltyConfig l1(double weight) { return {PenaltyKind::l1, 1.0, weight, 40}; }
  static PenaltyConfig tv(double weight, int inner = 40) { return {PenaltyKind::tv, 1.0, weight, inner}; }
};

namespace detail {

inline void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw ParameterError(std::string(name) + " must be a positive finite number");
}

/// Objective of the scalar Cauchy proximal subproblem at u.
inline double cauchy_prox_objective(double u, double x, double gamma, double mu) {
  return (x - u) * (x - u) / (2.0 * mu) + std::log(gamma * gamma + u * u) - std::log(gamma);
}

/// Cardano solution for x >= 0; the caller restores the sign.
inline double prox_cauchy_nonneg(double x, double gamma, double mu) {
  const double g2 = gamma * gamma;
  const double b = g2 + 2.0 * mu;
  const double p = b - x * x / 3.0;
  const double q = x * g2 + 2.0 * x * x * x / 27.0 - x * b / 3.0;
  const double disc = p * p * p / 27.0 + q * q / 4.0;

  if (disc >= 0.0) {
    const double root = std::sqrt(disc);
    const double s = std::cbrt(q / 2.0 + root);
    const double t = std::cbrt(q / 2.0 - root);
    double u = x / 3.0 + s + t;
    // s + t cancels for large x; one Newton step restores full precision.
    const double f = ((u - x) * u + b) * u - x * g2;
    const double df = (3.0 * u - 2.0 * x) * u + b;
    if (df > 0.0) {
      const double v = u - f / df;
      if (v >= 0.0 && v <= x) u = v;
    }
    return u;
  }

  // Three real roots (p < 0). Only reachable when gamma < sqrt(mu)/2.
  const double m = 2.0 * std::sqrt(-p / 3.0);
  const double arg = std::clamp(-(3.0 * q) / (2.0 * p) * std::sqrt(-3.0 / p), -1.0, 1.0);
  const double phi = std::acos(arg) / 3.0;
  double best = 0.0;
  double best_obj = INFINITY;
  for (int k = 0; k < 3; ++k) {
    const double z = x / 3.0 + m * std::cos(phi - 2.0 * std::numbers::pi * k / 3.0);
    const double obj = cauchy_prox_objective(z, x, gamma, mu);
    if (obj < best_obj) {
      best_obj = obj;
      best = z;
    }
  }
  return best;
}

} // namespace detail

/// -log(gamma / (gamma^2 + x^2))
inline double cauchy_penalty(double x, double gamma) {
  detail::require_positive(gamma, "gamma");
  return std::log(gamma * gamma + x * x) - std::log(gamma);
}

/// Closed-form proximal map of the Cauchy penalty with step mu: the real
/// root of u^3 - x u^2 + (gamma^2 + 2 mu) u - x gamma^2 = 0 by Cardano's
/// formula. Unique minimiser of the subproblem when gamma >= sqrt(mu)/2.
inline double prox_cauchy_scalar(double x, double gamma, double mu) {
  if (!std::isfinite(x)) throw InputError("prox_cauchy: non-finite input");
  detail::require_positive(gamma, "gamma");
  detail::require_positive(mu, "mu");
  const double z = detail::prox_cauchy_nonneg(std::abs(x), gamma, mu);
  return std::signbit(x) ? -z : z;
}

/// Minimiser of the scalar subproblem by golden-section search on the
/// segment between 0 and x, which always holds it. Independent of Cardano.
inline double prox_cauchy_golden(double x, double gamma, double mu, double tol = 1e-12) {
  detail::require_positive(gamma, "gamma");
  detail::require_positive(mu, "mu");
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = std::min(0.0, x), b = std::max(0.0, x);
  double c = b - invphi * (b - a), d = a + invphi * (b - a);
  double fc = detail::cauchy_prox_objective(c, x, gamma, mu);
  double fd = detail::cauchy_prox_objective(d, x, gamma, mu);
  while (b - a > tol * std::max(1.0, std::abs(x))) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = detail::cauchy_prox_objective(c, x, gamma, mu);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = detail::cauchy_prox_objective(d, x, gamma, mu);
    }
  }
  return 0.5 * (a + b);
}

/// u^3 - x u^2 + (gamma^2 + 2 mu) u - x gamma^2
inline double cauchy_prox_cubic(double u, double x, double gamma, double mu) {
  const double g2 = gamma * gamma;
  return ((u - x) * u + g2 + 2.0 * mu) * u - x * g2;
}

struct ProxCheckResult {
  int samples = 0;
  double max_residual = 0.0;    // |cubic| at the Cardano root
  double max_deviation = 0.0;   // |Cardano - golden section|
};

/// Seeded sweep over x in [-100, 100], mu in [1e-3, 10] and
/// gamma = sqrt(mu)/2 * (1 + U[0, 3]); every tenth sample sits on the
/// boundary gamma = sqrt(mu)/2.
inline ProxCheckResult prox_check(int samples, std::uint64_t seed) {
  if (samples < 1) throw ParameterError("prox_check needs at least one sample");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(-100.0, 100.0), ulog(std::log(1e-3), std::log(10.0)), ug(0.0, 3.0);
  ProxCheckResult res;
  res.samples = samples;
  for (int i = 0; i < samples; ++i) {
    const double x = ux(rng);
    const double mu = std::exp(ulog(rng));
    const double stretch = ug(rng);
    const double gamma = std::sqrt(mu) / 2.0 * (i % 10 == 0 ? 1.0 : 1.0 + stretch);
    const double u = prox_cauchy_scalar(x, gamma, mu);
    res.max_residual = std::max(res.max_residual, std::abs(cauchy_prox_cubic(u, x, gamma, mu)));
    res.max_deviation = std::max(res.max_deviation, std::abs(u - prox_cauchy_golden(x, gamma, mu)));
  }
  return res;
}

inline Image prox_cauchy(const Image& img, double gamma, double mu) {
  detail::require_positive(gamma, "gamma");
  detail::require_positive(mu, "mu");
  Image out(img.shape());
  for (std::size_t i = 0; i < img.size(); ++i) out[i] = prox_cauchy_scalar(img[i], gamma, mu);
  return out;
}

/// Soft threshold.
inline double prox_l1_scalar(double x, double threshold) {
  if (!(threshold >= 0.0)) throw ParameterError("soft threshold must be non-negative");
  const double mag = std::abs(x) - threshold;
  return mag > 0.0 ? std::copysign(mag, x) : 0.0;
}

inline Image prox_l1(const Image& img, double threshold) {
  if (!(threshold >= 0.0)) throw ParameterError("soft threshold must be non-negative");
  return map(img, [threshold](double v) { return prox_l1_scalar(v, threshold); });
}

// Forward differences with a zero difference on the last row/column
// (mirror boundary), and the matching negative-adjoint divergence.

struct Gradient {
  Image dx;
  Image dy;
};

inline Gradient forward_gradient(const Image& u) {
  Gradient g{Image(u.shape()), Image(u.shape())};
  const std::size_t R = u.rows(), C = u.cols();
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t c = 0; c < C; ++c) {
      g.dx(r, c) = c + 1 < C ? u(r, c + 1) - u(r, c) : 0.0;
      g.dy(r, c) = r + 1 < R ? u(r + 1, c) - u(r, c) : 0.0;
    }
  return g;
}

inline Image divergence(const Image& px, const Image& py) {
  px.check_same(py);
  const std::size_t R = px.rows(), C = px.cols();
  Image d(px.shape());
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t c = 0; c < C; ++c) {
      double v = 0.0;
      if (c + 1 < C) v += px(r, c);
      if (c > 0) v -= px(r, c - 1);
      if (r + 1 < R) v += py(r, c);
      if (r > 0) v -= py(r - 1, c);
      d(r, c) = v;
    }
  return d;
}

/// Isotropic discrete total variation.
inline double tv_seminorm(const Image& u) {
  const auto g = forward_gradient(u);
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) acc += std::hypot(g.dx[i], g.dy[i]);
  return acc;
}

/// Approximate argmin_u ||img - u||^2 / (2 mu) + weight * TV(u) by projected
/// gradient on the dual (Chambolle), `inner_iters` steps of size 0.249.
inline Image prox_tv(const Image& img, double weight, double mu, int inner_iters) {
  if (!(weight >= 0.0)) throw ParameterError("tv weight must be non-negative");
  detail::require_positive(mu, "mu");
  if (inner_iters < 1) throw ParameterError("tv inner iterations must be >= 1");
  if (weight == 0.0) return img;

  constexpr double tau = 0.249;
  const double lambda = weight * mu;
  Image px(img.shape()), py(img.shape());
  for (int it = 0; it < inner_iters; ++it) {
    Image v = divergence(px, py);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= img[i] / lambda;
    const auto g = forward_gradient(v);
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double nx = px[i] + tau * g.dx[i];
      const double ny = py[i] + tau * g.dy[i];
      const double scale = std::max(1.0, std::hypot(nx, ny));
      px[i] = nx / scale;
      py[i] = ny / scale;
    }
  }
  Image u = divergence(px, py);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = img[i] - lambda * u[i];
  return u;
}

inline double penalty_value(const Image& img, const PenaltyConfig& cfg) {
  cfg.validate();
  switch (cfg.kind) {
    case PenaltyKind::cauchy: {
      double acc = 0.0;
      const double g2 = cfg.gamma * cfg.gamma;
      const double lg = std::log(cfg.gamma);
      for (double v : img) acc += std::log(g2 + v * v) - lg;
      return acc;
    }
    case PenaltyKind::l1: {
      double acc = 0.0;
      for (double v : img) acc += std::abs(v);
      return cfg.weight * acc;
    }
    case PenaltyKind::tv: return cfg.weight * tv_seminorm(img);
  }
  return 0.0;
}

/// Proximal map of the configured penalty with step mu.
inline Image penalty_prox(const Image& img, const PenaltyConfig& cfg, double mu) {
  cfg.validate();
  switch (cfg.kind) {
    case PenaltyKind::cauchy: return prox_cauchy(img, cfg.gamma, mu);
    case PenaltyKind::l1: return prox_l1(img, cfg.weight * mu);
    case PenaltyKind::tv: return prox_tv(img, cfg.weight, mu, cfg.tv_inner_iters);
  }
  return img;
}

} // namespace cps
