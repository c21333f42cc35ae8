#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <utility>

#include "cps/errors.hpp"
#include "cps/image.hpp"
#include "cps/operators.hpp"

namespace cps {

enum class SceneKind { piecewise_smooth, point_scatterers, wake_scene };

inline std::string_view to_string(SceneKind k) {
  switch (k) {
    case SceneKind::piecewise_smooth: return "piecewise_smooth";
    case SceneKind::point_scatterers: return "point_scatterers";
    case SceneKind::wake_scene: return "wake_scene";
  }
  return "unknown";
}

inline SceneKind parse_scene_kind(std::string_view s) {
  if (s == "piecewise_smooth") return SceneKind::piecewise_smooth;
  if (s == "point_scatterers") return SceneKind::point_scatterers;
  if (s == "wake_scene") return SceneKind::wake_scene;
  throw ParameterError("unknown scene kind '" + std::string(s) + "'");
}

/// Canonical hypothesis order used by wake scenes, reports and truth flags.
enum class WakeKind { turbulent, narrow_v_port, narrow_v_starboard, kelvin_port, kelvin_starboard };
inline constexpr std::array<WakeKind, 5> kWakeKinds = {
    WakeKind::turbulent, WakeKind::narrow_v_port, WakeKind::narrow_v_starboard,
    WakeKind::kelvin_port, WakeKind::kelvin_starboard};

inline std::string_view to_string(WakeKind k) {
  switch (k) {
    case WakeKind::turbulent: return "turbulent";
    case WakeKind::narrow_v_port: return "narrow_v_port";
    case WakeKind::narrow_v_starboard: return "narrow_v_starboard";
    case WakeKind::kelvin_port: return "kelvin_port";
    case WakeKind::kelvin_starboard: return "kelvin_starboard";
  }
  return "unknown";
}

using WakeFlags = std::array<bool, 5>;

struct WakeParams {
  double turbulent_angle = 60.0;   // degrees, normal direction of the turbulent line
  double turbulent_offset = 0.0;   // pixels from the image centre
  std::array<double, 5> contrast = {0.5, 0.6, 0.6, 0.6, 0.6};  // canonical order
  double narrow_v_half_angle = 3.0;
  double kelvin_half_angle = 19.5;
  double looks = 4.0;       // sea texture speckle
  double line_width = 2.0;  // pixels
};

struct SceneDescriptor {
  SceneKind kind = SceneKind::piecewise_smooth;
  std::size_t size = 128;
  std::uint64_t seed = 0;
  int scatterers = 20;       // point_scatterers
  double background = 0.05;  // point_scatterers: peak of the smooth floor (min is a quarter of it)
  WakeParams wake;
  std::optional<WakeFlags> truth;  // explicit override of wake visibility

  void validate() const {
    if (size < 32) throw ParameterError("scene size must be >= 32");
    if (kind == SceneKind::point_scatterers &&
        (scatterers < 0 || std::size_t(scatterers) > size * size))
      throw ParameterError("scatterer count out of range");
    if (kind == SceneKind::wake_scene) {
      for (double c : wake.contrast)
        if (!(c >= 0.0)) throw ParameterError("wake contrasts must be non-negative");
      if (!(wake.looks > 0.0)) throw ParameterError("wake sea texture looks must be positive");
    }
  }

  /// Visibility flags of a wake scene: explicit truth if given, else contrast > 0.
  WakeFlags wake_truth() const {
    if (kind != SceneKind::wake_scene) throw ParameterError("truth flags exist only for wake scenes");
    if (truth) return *truth;
    WakeFlags f{};
    for (std::size_t i = 0; i < 5; ++i) f[i] = wake.contrast[i] > 0.0;
    return f;
  }
};

namespace detail {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Sum of a few random low-frequency cosines, rescaled to [0, 1].
inline Image smooth_field(std::size_t n, std::mt19937_64& rng, int terms, double max_freq) {
  Image f(n, n);
  for (int t = 0; t < terms; ++t) {
    const double fx = uniform(rng, -max_freq, max_freq), fy = uniform(rng, -max_freq, max_freq);
    const double phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    const double amp = uniform(rng, 0.5, 1.0);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c)
        f(r, c) += amp * std::cos(2.0 * std::numbers::pi * (fx * double(c) + fy * double(r)) / double(n) + phase);
  }
  const double lo = min_value(f), hi = max_value(f);
  return hi > lo ? map(f, [&](double v) { return (v - lo) / (hi - lo); }) : Image(f.shape(), 0.5);
}

inline Image piecewise_smooth_phantom(const SceneDescriptor& d) {
  const std::size_t n = d.size;
  std::mt19937_64 rng(d.seed);
  const double N = double(n);
  // Smooth terrain plus a fine oscillating sea-like texture.
  Image img = smooth_field(n, rng, 4, 3.0) * 0.25;
  const Image swell = smooth_field(n, rng, 3, N / 8.0);
  for (std::size_t i = 0; i < img.size(); ++i) img[i] += 0.08 + 0.06 * swell[i];

  const int shapes = 6;
  for (int s = 0; s < shapes; ++s) {
    const bool ellipse = s % 2 == 1;
    const double cx = uniform(rng, 0.15 * N, 0.85 * N), cy = uniform(rng, 0.15 * N, 0.85 * N);
    const double ax = uniform(rng, 0.05 * N, 0.18 * N), ay = uniform(rng, 0.05 * N, 0.18 * N);
    const double level = uniform(rng, 0.15, 0.55);
    const double tilt = uniform(rng, -0.15, 0.15);  // slow ramp inside the shape
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) {
        const double dx = (double(c) - cx) / ax, dy = (double(r) - cy) / ay;
        const bool inside = ellipse ? dx * dx + dy * dy <= 1.0 : std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0;
        if (inside) img(r, c) = level + 0.2 * img(r, c) + tilt * dx;
      }
  }
  // A few strong isolated reflectors.
  for (int k = 0; k < 8; ++k) {
    const auto r = std::size_t(uniform(rng, 0.05 * N, 0.95 * N));
    const auto c = std::size_t(uniform(rng, 0.05 * N, 0.95 * N));
    img(r, c) = uniform(rng, 0.85, 1.0);
  }
  for (auto& v : img) v = std::clamp(v, 0.02, 1.0);
  return img;
}

inline Image point_scatterer_phantom(const SceneDescriptor& d) {
  const std::size_t n = d.size;
  std::mt19937_64 rng(d.seed);
  const double floor = std::clamp(d.background, 0.0, 0.9);
  Image img = map(smooth_field(n, rng, 3, 2.0), [floor](double v) { return floor * (0.25 + 0.75 * v); });
  std::set<std::size_t> taken;
  std::uniform_int_distribution<std::size_t> pick(0, n * n - 1);
  while (taken.size() < std::size_t(d.scatterers)) {
    const std::size_t p = pick(rng);
    if (taken.insert(p).second) img[p] = uniform(rng, 0.92, 1.0);
  }
  return img;
}

// Anti-aliased ray from `origin` along `dir` (unit), width w.
inline Image ray_mask(std::size_t n, std::array<double, 2> origin, std::array<double, 2> dir, double width) {
  Image m(n, n);
  const double cx = (double(n) - 1.0) / 2.0;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      const double x = double(c) - cx - origin[0];
      const double y = cx - double(r) - origin[1];
      const double t = x * dir[0] + y * dir[1];
      double dist;
      if (t < 0.0) dist = std::hypot(x, y);
      else dist = std::abs(x * dir[1] - y * dir[0]);
      m(r, c) = std::clamp(width / 2.0 + 0.5 - dist, 0.0, 1.0);
    }
  return m;
}

} // namespace detail

inline Image gen_gamma_speckle(double looks, Shape shape, std::uint64_t seed) {
  if (!(looks > 0.0)) throw ParameterError("number of looks must be positive");
  std::mt19937_64 rng(seed);
  std::gamma_distribution<double> g(looks, 1.0 / looks);
  Image v(shape);
  for (auto& x : v) {
    do x = g(rng);
    while (!(x > 0.0));
  }
  return v;
}

inline Image gen_lognormal_speckle(double looks, Shape shape, std::uint64_t seed) {
  if (!(looks > 0.0)) throw ParameterError("number of looks must be positive");
  const double s2 = std::log1p(1.0 / looks);
  std::mt19937_64 rng(seed);
  std::lognormal_distribution<double> g(-0.5 * s2, std::sqrt(s2));
  Image v(shape);
  for (auto& x : v) x = g(rng);
  return v;
}

/// Y = X V
inline Image apply_speckle(const Image& x, const Image& v) { return hadamard(x, v); }

inline Image awgn(const Image& img, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw ParameterError("noise sigma must be non-negative");
  if (sigma == 0.0) return img;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  Image out = img;
  for (auto& v : out) v += normal(rng);
  return out;
}

inline Image gen_phantom(const SceneDescriptor& d) {
  d.validate();
  switch (d.kind) {
    case SceneKind::piecewise_smooth: return detail::piecewise_smooth_phantom(d);
    case SceneKind::point_scatterers: return detail::point_scatterer_phantom(d);
    case SceneKind::wake_scene: break;
  }
  throw ParameterError("gen_phantom does not render wake scenes; use gen_wake_scene");
}

struct SrObservation {
  Image low_res;
  double sigma = 0.0;
};

/// Blur, decimate, then add white noise at the requested blurred-signal SNR.
inline SrObservation degrade_sr(const Image& x, const Image& psf, int factor, double bsnr_db,
                                std::uint64_t seed) {
  const auto H = blur_operator(psf, x.shape());
  const auto D = downsample_operator(factor, x.shape());
  const Image clean = D.apply(H.apply(x));
  const double sigma =
      std::isinf(bsnr_db) && bsnr_db > 0 ? 0.0 : std::sqrt(variance(clean) / std::pow(10.0, bsnr_db / 10.0));
  return {awgn(clean, sigma, seed), sigma};
}

/// Noiseless structure map of a wake scene: 1 on open sea, below 1 along the
/// turbulent ray, above 1 along visible arms. Arms are suppressed inside the
/// turbulent band so the dark wake stays dark where the narrow-V arms leave it.
inline Image wake_structure_map(const SceneDescriptor& d) {
  const auto& w = d.wake;
  const double deg = std::numbers::pi / 180.0;
  const double th = w.turbulent_angle * deg;
  const std::array<double, 2> ship = {w.turbulent_offset * std::cos(th), w.turbulent_offset * std::sin(th)};
  const std::array<double, 5> rel = {0.0, -w.narrow_v_half_angle, w.narrow_v_half_angle,
                                     -w.kelvin_half_angle, w.kelvin_half_angle};
  auto ray = [&](std::size_t h) {
    const double a = th + rel[h] * deg;
    return detail::ray_mask(d.size, ship, {-std::sin(a), std::cos(a)}, w.line_width);
  };
  const Image turbulent = w.contrast[0] > 0.0 ? ray(0) : Image(d.size, d.size);
  Image bright(d.size, d.size);
  for (std::size_t h = 1; h < 5; ++h) {
    if (w.contrast[h] <= 0.0) continue;
    const Image m = ray(h);
    for (std::size_t i = 0; i < bright.size(); ++i) bright[i] += w.contrast[h] * m[i];
  }
  Image s(d.size, d.size);
  for (std::size_t i = 0; i < s.size(); ++i)
    s[i] = std::max((1.0 - w.contrast[0] * turbulent[i]) * (1.0 + bright[i] * (1.0 - turbulent[i])), 0.05);
  return s;
}

struct WakeScene {
  Image image;
  WakeFlags truth{};
};

/// Gamma sea texture times the wake structure map.
inline WakeScene gen_wake_scene(const SceneDescriptor& d) {
  d.validate();
  if (d.kind != SceneKind::wake_scene) throw ParameterError("descriptor is not a wake scene");
  const Image structure = wake_structure_map(d);
  const Image sea = gen_gamma_speckle(d.wake.looks, structure.shape(), d.seed);
  return {apply_speckle(structure, sea), d.wake_truth()};
}

} // namespace cps
