#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "cps/errors.hpp"
#include "cps/image.hpp"

namespace cps {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double rmse(const Image& ref, const Image& est) {
  ref.check_same(est);
  if (ref.empty()) throw ParameterError("rmse of empty images");
  double acc = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) acc += (ref[i] - est[i]) * (ref[i] - est[i]);
  return std::sqrt(acc / double(ref.size()));
}

/// 20 log10(peak / rmse); +inf for identical images. Peak defaults to max(ref).
inline double psnr(const Image& ref, const Image& est, std::optional<double> peak = {}) {
  const double p = peak ? *peak : max_value(ref);
  if (!(p > 0.0)) throw ParameterError("psnr peak must be positive");
  const double e = rmse(ref, est);
  if (e == 0.0) return kInf;
  return 20.0 * std::log10(p / e);
}

/// Signal energy over error energy, in dB.
inline double smse(const Image& ref, const Image& est) {
  ref.check_same(est);
  double sig = 0.0, err = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    sig += ref[i] * ref[i];
    err += (ref[i] - est[i]) * (ref[i] - est[i]);
  }
  if (sig == 0.0) throw DomainError("smse reference image is all zero");
  if (err == 0.0) return kInf;
  return 10.0 * std::log10(sig / err);
}

/// Mean SSIM over all 11x11 windows fully inside the image (Gaussian
/// weights, sigma 1.5, K1 = 0.01, K2 = 0.03). Dynamic range defaults to max(ref).
inline double ssim(const Image& ref, const Image& est, std::optional<double> dynamic_range = {}) {
  ref.check_same(est);
  constexpr int W = 11;
  if (ref.rows() < W || ref.cols() < W) throw ParameterError("ssim needs images of at least 11x11");
  const double range = dynamic_range ? *dynamic_range : max_value(ref);
  if (!(range > 0.0)) throw ParameterError("ssim dynamic range must be positive");

  double w[W][W];
  double wsum = 0.0;
  for (int i = 0; i < W; ++i)
    for (int j = 0; j < W; ++j) {
      const double di = i - W / 2, dj = j - W / 2;
      w[i][j] = std::exp(-(di * di + dj * dj) / (2.0 * 1.5 * 1.5));
      wsum += w[i][j];
    }
  for (auto& row : w)
    for (double& v : row) v /= wsum;

  const double c1 = (0.01 * range) * (0.01 * range);
  const double c2 = (0.03 * range) * (0.03 * range);
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t r = 0; r + W <= ref.rows(); ++r)
    for (std::size_t c = 0; c + W <= ref.cols(); ++c) {
      double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
      for (int i = 0; i < W; ++i)
        for (int j = 0; j < W; ++j) {
          const double x = ref(r + i, c + j), y = est(r + i, c + j), k = w[i][j];
          mx += k * x;
          my += k * y;
          sxx += k * x * x;
          syy += k * y * y;
          sxy += k * x * y;
        }
      const double vx = sxx - mx * mx, vy = syy - my * my, cxy = sxy - mx * my;
      total += ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++count;
    }
  return total / double(count);
}

/// Visible-and-detected, invisible-and-discarded, invisible-but-detected,
/// visible-but-discarded.
struct ConfusionCounts {
  long tp = 0;
  long tn = 0;
  long fp = 0;
  long fn = 0;

  long total() const noexcept { return tp + tn + fp + fn; }

  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    tn += o.tn;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Undefined ratios are NaN; lr_plus is +inf at perfect specificity.
struct DetectionMetrics {
  double accuracy = 0.0;
  double f1 = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  double lr_plus = 0.0;
  double youden_j = 0.0;
};

inline DetectionMetrics detection_metrics(const ConfusionCounts& c) {
  if (c.tp < 0 || c.tn < 0 || c.fp < 0 || c.fn < 0)
    throw DomainError("confusion counts must be non-negative");
  if (c.total() == 0) throw DomainError("confusion counts are empty");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  DetectionMetrics m;
  m.accuracy = double(c.tp + c.tn) / double(c.total());
  m.sensitivity = c.tp + c.fn > 0 ? double(c.tp) / double(c.tp + c.fn) : nan;
  m.specificity = c.tn + c.fp > 0 ? double(c.tn) / double(c.tn + c.fp) : nan;
  const long f1_den = 2 * c.tp + c.fp + c.fn;
  m.f1 = f1_den > 0 ? 2.0 * double(c.tp) / double(f1_den) : nan;
  if (std::isnan(m.sensitivity) || std::isnan(m.specificity)) {
    m.lr_plus = nan;
    m.youden_j = nan;
  } else {
    m.lr_plus = m.specificity == 1.0 ? kInf : m.sensitivity / (1.0 - m.specificity);
    m.youden_j = m.sensitivity + m.specificity - 1.0;
  }
  return m;
}

} // namespace cps
