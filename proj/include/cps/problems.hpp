#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "cps/errors.hpp"
#include "cps/image.hpp"
#include "cps/metrics.hpp"
#include "cps/operators.hpp"
#include "cps/penalty.hpp"
#include "cps/radon.hpp"
#include "cps/simulate.hpp"
#include "cps/solver.hpp"
#include "cps/wavelet.hpp"

namespace cps {

/// White-noise level from the finest diagonal wavelet band: MAD / 0.6745.
inline double estimate_noise_sigma(const Image& img) {
  if (img.rows() < 8 || img.cols() < 8) throw ParameterError("noise estimate needs at least 8x8 pixels");
  const Shape even{(img.rows() + 1) / 2 * 2, (img.cols() + 1) / 2 * 2};
  const Subbands sb = dwt2(pad_symmetric(img, even), 1);
  return mad(sb.details.front().diagonal.data()) / 0.6745;
}

// ---------------------------------------------------------------------------
// Super-resolution: Y = D H X + N

inline LinearOperator sr_operator(const Image& psf, int factor, Shape hi_shape) {
  return compose(downsample_operator(factor, hi_shape), blur_operator(psf, hi_shape));
}

inline SolveResult superresolve(const Image& low_res, const Image& psf, int factor,
                                const PenaltyConfig& penalty, const SolverConfig& cfg, double sigma) {
  if (factor < 1) throw ParameterError("super-resolution factor must be >= 1");
  const Shape hi{low_res.rows() * std::size_t(factor), low_res.cols() * std::size_t(factor)};
  return cps_solve({low_res, sr_operator(psf, factor, hi), sigma, penalty}, cfg);
}

namespace detail {

// Keys cubic convolution kernel, a = -0.5.
inline double keys_kernel(double t) {
  constexpr double a = -0.5;
  t = std::abs(t);
  if (t <= 1.0) return (a + 2.0) * t * t * t - (a + 3.0) * t * t + 1.0;
  if (t < 2.0) return a * t * t * t - 5.0 * a * t * t + 8.0 * a * t - 4.0 * a;
  return 0.0;
}

// Samples outside [0, n) are extrapolated linearly from the nearest pair.
inline double sample_extrapolated(const std::vector<double>& v, long k) {
  const long n = long(v.size());
  if (n == 1) return v[0];
  if (k < 0) return v[0] + double(k) * (v[1] - v[0]);
  if (k >= n) return v[std::size_t(n - 1)] + double(k - n + 1) * (v[std::size_t(n - 1)] - v[std::size_t(n - 2)]);
  return v[std::size_t(k)];
}

// Low-res sample i sits at high-res index i * factor, matching the decimator.
inline std::vector<double> cubic_upsample_1d(const std::vector<double>& v, int factor) {
  std::vector<double> out(v.size() * std::size_t(factor));
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double s = double(i) / double(factor);
    const long i0 = long(std::floor(s));
    const double t = s - double(i0);
    double acc = 0.0;
    for (long k = -1; k <= 2; ++k) acc += keys_kernel(t - double(k)) * sample_extrapolated(v, i0 + k);
    out[i] = acc;
  }
  return out;
}

} // namespace detail

/// Separable bicubic interpolation.
inline Image bicubic_upsample(const Image& y, int factor) {
  if (factor < 1) throw ParameterError("upsampling factor must be >= 1");
  if (factor == 1) return y;
  const std::size_t f = std::size_t(factor);
  Image rows_done(y.rows(), y.cols() * f);
  for (std::size_t r = 0; r < y.rows(); ++r) {
    std::vector<double> line(y.cols());
    for (std::size_t c = 0; c < y.cols(); ++c) line[c] = y(r, c);
    const auto up = detail::cubic_upsample_1d(line, factor);
    for (std::size_t c = 0; c < up.size(); ++c) rows_done(r, c) = up[c];
  }
  Image out(y.rows() * f, y.cols() * f);
  for (std::size_t c = 0; c < out.cols(); ++c) {
    std::vector<double> line(y.rows());
    for (std::size_t r = 0; r < y.rows(); ++r) line[r] = rows_done(r, c);
    const auto up = detail::cubic_upsample_1d(line, factor);
    for (std::size_t r = 0; r < up.size(); ++r) out(r, c) = up[r];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Image formation: y = Phi f + n

inline SolveResult form_image(const Image& y, const LinearOperator& phi, const PenaltyConfig& penalty,
                              const SolverConfig& cfg, double sigma) {
  return cps_solve({y, phi, sigma, penalty}, cfg);
}

/// Back-projection baseline Phi^T y.
inline Image matched_filter_recon(const Image& y, const LinearOperator& phi) { return phi.adjoint(y); }

/// |10 log10(||Xhat||^2 / ||Xmf||^2)|
inline double relative_error(const Image& xhat, const Image& xmf) {
  xhat.check_same(xmf);
  const double ref = squared_norm(xmf);
  if (ref == 0.0) throw DomainError("relative error reference image has zero norm");
  const double est = squared_norm(xhat);
  if (est == 0.0) return kInf;
  return std::abs(10.0 * std::log10(est / ref));
}

// ---------------------------------------------------------------------------
// Despeckling in the log-wavelet domain

struct DespeckleResult {
  Image image;
  double sigma = 0.0;           // estimated log-domain noise level
  std::vector<SolveResult> bands;  // finest level first; horizontal, vertical, diagonal
};

/// Y = X V. Works on log Y: each wavelet detail band is denoised as an
/// identity-operator problem with a shared noise level, the approximation
/// band passes through, and the exponentiated result is rescaled to the
/// input mean. The log-domain noise level is estimated unless given.
inline DespeckleResult despeckle(const Image& y, const PenaltyConfig& penalty, const SolverConfig& cfg,
                                 int levels = 3, std::optional<double> log_sigma = {}) {
  const auto bad = std::count_if(y.begin(), y.end(), [](double v) { return !(v > 0.0); });
  if (bad > 0)
    throw DomainError("despeckle needs strictly positive pixels; " + std::to_string(bad) +
                      " are not");
  if (levels < 1) throw ParameterError("wavelet levels must be >= 1");

  const std::size_t block = std::size_t(1) << levels;
  const Shape padded{(y.rows() + block - 1) / block * block, (y.cols() + block - 1) / block * block};
  const Image logy = map(pad_symmetric(y, padded), [](double v) { return std::log(v); });

  Subbands sb = dwt2(logy, levels);
  const auto& finest = sb.details.front().diagonal;
  const double sigma = log_sigma ? *log_sigma : mad(finest.data()) / 0.6745;
  if (log_sigma && !(sigma > 0.0)) throw ParameterError("despeckle sigma must be positive");

  DespeckleResult res;
  res.sigma = sigma;
  if (sigma > 1e-12) {
    for (auto& level : sb.details) {
      for (Image* band : {&level.horizontal, &level.vertical, &level.diagonal}) {
        SolveResult r = cps_solve({*band, identity_operator(band->shape()), sigma, penalty}, cfg);
        *band = r.solution;
        r.solution = Image();
        res.bands.push_back(std::move(r));
      }
    }
  }

  const Image restored = map(idwt2(sb), [](double v) { return std::exp(v); });
  Image out = crop(restored, 0, 0, y.shape());
  out *= mean(y) / mean(out);
  res.image = std::move(out);
  return res;
}

// ---------------------------------------------------------------------------
// Wake detection in the line domain: Y = C Omega + N, C = FBP

enum class Polarity { dark, bright };

struct WakeHypothesis {
  WakeKind kind = WakeKind::turbulent;
  double r = 0.0;      // pixels
  double theta = 0.0;  // degrees in [0, 180)
  Polarity polarity = Polarity::dark;
  bool decided_visible = false;
  double score = 0.0;  // robust z-score in the line domain
  double line_z = 0.0; // robust z-score of the raw data along the same line
};

struct WakeReport {
  std::array<WakeHypothesis, 5> hypotheses;  // canonical order
  Image omega_hat;
  SolveResult solve;

  WakeFlags visibility() const {
    WakeFlags f{};
    for (std::size_t i = 0; i < 5; ++i) f[i] = hypotheses[i].decided_visible;
    return f;
  }
};

struct DetectConfig {
  double narrow_window = 5.0;  // degrees either side of the turbulent angle
  double kelvin_lo = 14.0;
  double kelvin_hi = 20.0;
  double tau = 3.0;            // visibility threshold in robust z units
  double offset_window = 3.0;  // pixels around the arm's expected offset
  double false_alarm = 0.05;   // per hypothesis, shared among the lines it searches
};

namespace detail {

// Zero-mean, unit-level contrast image restricted to the inscribed disc.
inline Image wake_preprocess(const Image& y) {
  const double m = mean(y);
  if (!(m > 0.0)) throw DomainError("wake image must have a positive mean intensity");
  const double c = (double(y.cols()) - 1.0) / 2.0, radius = double(y.cols()) / 2.0;
  Image out(y.shape());
  for (std::size_t r = 0; r < y.rows(); ++r)
    for (std::size_t k = 0; k < y.cols(); ++k) {
      const double dx = double(k) - c, dy = double(r) - c;
      if (dx * dx + dy * dy <= radius * radius) out(r, k) = y(r, k) / m - 1.0;
    }
  return out;
}

inline double offset_of(std::size_t k, std::size_t offsets) { return double(k) - (double(offsets) - 1.0) / 2.0; }

// z with P(N(0,1) > z) = p.
inline double normal_upper_quantile(double p) {
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (0.5 * std::erfc(mid / std::numbers::sqrt2) > p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Line sums of `img` scaled to unit variance under white noise restricted to `mask`.
inline Image line_statistic(const Image& img, const Image& mask, const RadonGeometry& g) {
  Image s(g.sinogram_shape()), v(g.sinogram_shape());
  for_each_projection(img.shape(), g, [&](std::size_t a, std::size_t k, double w, std::size_t p) {
    s(a, k) += w * img[p];
    v(a, k) += w * w * mask[p];
  });
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = v[i] > 0.0 ? s[i] / std::sqrt(v[i]) : 0.0;
  return s;
}

} // namespace detail

/// Per-angle z-scores of a line-domain estimate. Each angle row is centred on
/// its median and divided by the robust spread (1.4826 MAD) of the same row
/// of `reference`, using only bins within `support` pixels of the centre.
/// Passing the estimate itself as reference gives ordinary robust z-scores.
inline Image line_domain_zscores(const Image& omega, const Image& reference, double support) {
  omega.check_same(reference);
  Image z(omega.shape());
  std::vector<double> row, ref;
  std::vector<double> scales(omega.rows()), centres(omega.rows());
  double largest = 0.0;
  for (std::size_t a = 0; a < omega.rows(); ++a) {
    row.clear();
    ref.clear();
    for (std::size_t k = 0; k < omega.cols(); ++k)
      if (std::abs(detail::offset_of(k, omega.cols())) <= support) {
        row.push_back(omega(a, k));
        ref.push_back(reference(a, k));
      }
    centres[a] = median(row);
    scales[a] = 1.4826 * mad(ref);
    largest = std::max(largest, scales[a]);
  }
  for (std::size_t a = 0; a < omega.rows(); ++a) {
    const double s = std::max(scales[a], 1e-3 * largest);
    for (std::size_t k = 0; k < omega.cols(); ++k)
      z(a, k) = s > 0.0 ? (omega(a, k) - centres[a]) / s : 0.0;
  }
  return z;
}

inline Image line_domain_zscores(const Image& omega, double support) {
  return line_domain_zscores(omega, omega, support);
}

inline WakeReport detect_wakes(const Image& y, const RadonGeometry& geom, const PenaltyConfig& penalty,
                               const SolverConfig& cfg, const DetectConfig& det = {}) {
  if (y.rows() != y.cols()) throw ContractError("wake detection needs a square image");
  if (!(det.false_alarm > 0.0 && det.false_alarm < 1.0)) throw ParameterError("false alarm rate must be in (0, 1)");
  const Image pre = detail::wake_preprocess(y);

  std::vector<double> inside;
  Image disc(y.shape());
  const double c0 = (double(y.cols()) - 1.0) / 2.0, radius = double(y.cols()) / 2.0;
  for (std::size_t r = 0; r < y.rows(); ++r)
    for (std::size_t k = 0; k < y.cols(); ++k)
      if ((double(k) - c0) * (double(k) - c0) + (double(r) - c0) * (double(r) - c0) <= radius * radius) {
        inside.push_back(pre(r, k));
        disc(r, k) = 1.0;
      }
  const double sigma = std::max(1.4826 * mad(inside), 1e-6);

  WakeReport rep;
  const LinearOperator C = fbp_operator(geom, y.shape());
  rep.solve = cps_solve({pre, C, sigma, penalty}, cfg);
  rep.omega_hat = rep.solve.solution;
  // Scores are in units of the noise of the unregularized estimate C^T y, so
  // a line counts only if the regularized solve lifted it above that floor.
  const Image z = line_domain_zscores(rep.omega_hat, C.adjoint(pre) * (1.0 / rep.solve.opnorm_sq), radius);

  const std::size_t A = geom.angles_deg.size(), K = geom.offsets;
  auto in_support = [&](std::size_t k) { return std::abs(detail::offset_of(k, K)) <= radius; };

  // A hypothesis is kept only if the data along its line also stands out,
  // at a level corrected for how many lines were searched to find it.
  const Image lz = line_domain_zscores(detail::line_statistic(pre, disc, geom), radius);
  auto data_threshold = [&](std::size_t searched) {
    return std::max(det.tau, detail::normal_upper_quantile(det.false_alarm / double(std::max<std::size_t>(searched, 1))));
  };
  std::size_t support_bins = 0;
  for (std::size_t k = 0; k < K; ++k) support_bins += in_support(k);

  // Turbulent wake: most negative line.
  std::size_t ta = 0, tk = 0;
  double tz = 0.0;
  for (std::size_t a = 0; a < A; ++a)
    for (std::size_t k = 0; k < K; ++k)
      if (in_support(k) && z(a, k) < tz) {
        tz = z(a, k);
        ta = a;
        tk = k;
      }
  const double theta_t = geom.angles_deg[ta];
  const double r_t = detail::offset_of(tk, K);
  const bool dark = tz <= -det.tau && lz(ta, tk) <= -data_threshold(A * support_bins);
  rep.hypotheses[0] = {WakeKind::turbulent, r_t, theta_t, Polarity::dark, dark, tz, lz(ta, tk)};

  // Arms: brightest line within an angular window on each side, near the
  // offset where a line through the ship would project.
  auto search_arm = [&](WakeKind kind, double lo, double hi, double side) {
    WakeHypothesis best{kind, 0.0, 0.0, Polarity::bright, false, -kInf, 0.0};
    std::size_t searched = 0;
    for (std::size_t a = 0; a < A; ++a) {
      double delta = geom.angles_deg[a] - theta_t;  // signed angular offset, folded to (-90, 90]
      double flip = 1.0;
      while (delta > 90.0) { delta -= 180.0; flip = -flip; }
      while (delta <= -90.0) { delta += 180.0; flip = -flip; }
      const double mag = side * delta;
      if (mag < lo || mag > hi) continue;
      const double expected = flip * r_t * std::cos(delta * std::numbers::pi / 180.0);
      for (std::size_t k = 0; k < K; ++k) {
        const double off = detail::offset_of(k, K);
        if (!in_support(k) || std::abs(off - expected) > det.offset_window) continue;
        ++searched;
        if (z(a, k) > best.score) {
          best.score = z(a, k);
          best.line_z = lz(a, k);
          best.theta = geom.angles_deg[a];
          best.r = off;
        }
      }
    }
    if (!std::isfinite(best.score)) best.score = 0.0;
    best.decided_visible = best.score >= det.tau && best.line_z >= data_threshold(searched);
    return best;
  };
  rep.hypotheses[1] = search_arm(WakeKind::narrow_v_port, 0.5, det.narrow_window, -1.0);
  rep.hypotheses[2] = search_arm(WakeKind::narrow_v_starboard, 0.5, det.narrow_window, +1.0);
  rep.hypotheses[3] = search_arm(WakeKind::kelvin_port, det.kelvin_lo, det.kelvin_hi, -1.0);
  rep.hypotheses[4] = search_arm(WakeKind::kelvin_starboard, det.kelvin_lo, det.kelvin_hi, +1.0);

  // Flat estimate: nothing to decide on.
  if (max_value(rep.omega_hat) == min_value(rep.omega_hat))
    for (auto& h : rep.hypotheses) {
      h.decided_visible = false;
      h.score = 0.0;
      h.line_z = 0.0;
    }
  return rep;
}

inline ConfusionCounts classify_detections(const WakeFlags& decided, const WakeFlags& truth) {
  ConfusionCounts c;
  for (std::size_t i = 0; i < 5; ++i) {
    if (truth[i] && decided[i]) ++c.tp;
    else if (!truth[i] && !decided[i]) ++c.tn;
    else if (!truth[i] && decided[i]) ++c.fp;
    else ++c.fn;
  }
  return c;
}

inline ConfusionCounts classify_detections(const WakeReport& report, const WakeFlags& truth) {
  return classify_detections(report.visibility(), truth);
}

} // namespace cps
