#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "cps/errors.hpp"
#include "cps/image.hpp"
#include "cps/operators.hpp"

namespace cps {

enum class RadonFilter { none, ram_lak };

/// Parallel-beam geometry. Sinograms are (angles x offsets) images; offset
/// bin k sits at signed distance k - (offsets - 1)/2 from the image centre,
/// measured along (cos theta, sin theta) with y pointing up.
struct RadonGeometry {
  std::vector<double> angles_deg;
  std::size_t offsets = 0;
  RadonFilter filter = RadonFilter::ram_lak;

  /// 0:1:179 degrees, ceil(sqrt(2) N) bins.
  static RadonGeometry standard(std::size_t n, std::size_t n_angles = 180) {
    RadonGeometry g;
    for (std::size_t i = 0; i < n_angles; ++i) g.angles_deg.push_back(180.0 * double(i) / double(n_angles));
    g.offsets = min_offsets(n);
    return g;
  }

  static std::size_t min_offsets(std::size_t n) {
    return std::size_t(std::ceil(std::numbers::sqrt2 * double(n)));
  }

  Shape sinogram_shape() const { return {angles_deg.size(), offsets}; }

  void validate(Shape image) const {
    if (angles_deg.empty()) throw ParameterError("radon geometry has no angles");
    for (std::size_t i = 0; i < angles_deg.size(); ++i) {
      if (angles_deg[i] < 0.0 || angles_deg[i] >= 180.0)
        throw ParameterError("radon angles must lie in [0, 180)");
      if (i > 0 && !(angles_deg[i] > angles_deg[i - 1]))
        throw ParameterError("radon angles must be strictly increasing");
    }
    const std::size_t diag = std::max(image.rows, image.cols);
    if (offsets < min_offsets(diag))
      throw ContractError("radon geometry has " + std::to_string(offsets) +
                          " offsets, image " + to_string(image) + " needs " +
                          std::to_string(min_offsets(diag)));
  }
};

namespace detail {

struct RayTable {
  std::vector<double> cos_t, sin_t;
};

inline RayTable ray_table(const RadonGeometry& g) {
  RayTable t;
  for (double a : g.angles_deg) {
    const double rad = a * std::numbers::pi / 180.0;
    t.cos_t.push_back(std::cos(rad));
    t.sin_t.push_back(std::sin(rad));
  }
  return t;
}

// Calls f(angle, bin, weight, pixel) for every pixel/angle pair: the pixel
// value is split linearly between the two bins bracketing its projection.
template <class F>
void for_each_projection(Shape image, const RadonGeometry& g, F&& f) {
  const RayTable t = ray_table(g);
  const double cx = (double(image.cols) - 1.0) / 2.0;
  const double cy = (double(image.rows) - 1.0) / 2.0;
  const double centre = (double(g.offsets) - 1.0) / 2.0;
  for (std::size_t a = 0; a < g.angles_deg.size(); ++a) {
    for (std::size_t r = 0; r < image.rows; ++r) {
      const double y = cy - double(r);
      for (std::size_t c = 0; c < image.cols; ++c) {
        const double x = double(c) - cx;
        const double pos = x * t.cos_t[a] + y * t.sin_t[a] + centre;
        const double base = std::floor(pos);
        const double w = pos - base;
        const auto k = std::size_t(base);
        const std::size_t pix = r * image.cols + c;
        f(a, k, 1.0 - w, pix);
        if (w > 0.0 && k + 1 < g.offsets) f(a, k + 1, w, pix);
      }
    }
  }
}

/// Ram-Lak impulse response at integer lag n (unit bin spacing).
inline double ram_lak_tap(long n) {
  if (n == 0) return 0.25;
  if (n % 2 == 0) return 0.0;
  return -1.0 / (std::numbers::pi * std::numbers::pi * double(n) * double(n));
}

} // namespace detail

/// Discrete line integrals; each pixel is distributed linearly over offset bins.
inline Image radon(const Image& img, const RadonGeometry& g) {
  g.validate(img.shape());
  Image sino(g.sinogram_shape());
  detail::for_each_projection(img.shape(), g, [&](std::size_t a, std::size_t k, double w, std::size_t p) {
    sino(a, k) += w * img[p];
  });
  return sino;
}

/// Exact adjoint of radon: each pixel gathers the linearly interpolated
/// sinogram value along every angle.
inline Image backproject(const Image& sino, const RadonGeometry& g, Shape image) {
  g.validate(image);
  if (sino.shape() != g.sinogram_shape())
    throw ContractError("sinogram " + to_string(sino.shape()) + " does not match geometry " +
                        to_string(g.sinogram_shape()));
  Image img(image);
  detail::for_each_projection(image, g, [&](std::size_t a, std::size_t k, double w, std::size_t p) {
    img[p] += w * sino(a, k);
  });
  return img;
}

/// Per-angle Ram-Lak filtering, linear convolution truncated to the bin
/// range. The filter matrix is symmetric Toeplitz, hence self-adjoint.
inline Image ram_lak_filter(const Image& sino) {
  const std::size_t K = sino.cols();
  std::vector<double> taps(K);
  for (std::size_t n = 0; n < K; ++n) taps[n] = detail::ram_lak_tap(long(n));
  Image out(sino.shape());
  // Even taps other than the centre vanish.
  for (std::size_t a = 0; a < sino.rows(); ++a) {
    const double* row = &sino(a, 0);
    for (std::size_t i = 0; i < K; ++i) {
      double acc = taps[0] * row[i];
      for (std::size_t d = 1; d <= i; d += 2) acc += taps[d] * row[i - d];
      for (std::size_t d = 1; i + d < K; d += 2) acc += taps[d] * row[i + d];
      out(a, i) = acc;
    }
  }
  return out;
}

/// Filtered back-projection; with RadonFilter::none this is a scaled
/// back-projection.
inline Image fbp(const Image& sino, const RadonGeometry& g, Shape image) {
  const Image filtered = g.filter == RadonFilter::ram_lak ? ram_lak_filter(sino) : sino;
  return backproject(filtered, g, image) * (std::numbers::pi / double(g.angles_deg.size()));
}

/// Adjoint of fbp: radon, then the same filter and scale.
inline Image fbp_adjoint(const Image& img, const RadonGeometry& g) {
  Image s = radon(img, g);
  if (g.filter == RadonFilter::ram_lak) s = ram_lak_filter(s);
  return s * (std::numbers::pi / double(g.angles_deg.size()));
}

inline LinearOperator radon_operator(const RadonGeometry& g, Shape image) {
  g.validate(image);
  return {image, g.sinogram_shape(), [g](const Image& x) { return radon(x, g); },
          [g, image](const Image& s) { return backproject(s, g, image); }, "radon"};
}

/// Line-domain synthesis C: sinogram -> image.
inline LinearOperator fbp_operator(const RadonGeometry& g, Shape image) {
  g.validate(image);
  return {g.sinogram_shape(), image, [g, image](const Image& s) { return fbp(s, g, image); },
          [g](const Image& x) { return fbp_adjoint(x, g); }, "fbp"};
}

} // namespace cps
