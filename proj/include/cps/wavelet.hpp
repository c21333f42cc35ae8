#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "cps/errors.hpp"
#include "cps/image.hpp"
#include "cps/operators.hpp"

namespace cps {

/// Daubechies scaling filter with four vanishing moments (8 taps).
inline constexpr std::array<double, 8> db4_lowpass = {
    0.23037781330885523,  0.7148465705525415,   0.6308807679295904,  -0.02798376941698385,
    -0.18703481171888114, 0.030841381835986965, 0.032883011666982945, -0.010597401784997278};

namespace detail {

inline constexpr std::array<double, 8> db4_highpass = [] {
  std::array<double, 8> g{};
  for (std::size_t k = 0; k < 8; ++k)
    g[k] = (k % 2 == 0 ? 1.0 : -1.0) * db4_lowpass[7 - k];
  return g;
}();

// One periodic analysis step on n samples read with `stride`; writes n/2
// approximation coefficients followed by n/2 details.
inline void analyze_1d(const double* in, double* out, std::size_t n, std::size_t stride,
                       std::vector<double>& buf) {
  buf.assign(n, 0.0);
  const std::size_t half = n / 2;
  for (std::size_t i = 0; i < half; ++i) {
    double a = 0.0, d = 0.0;
    for (std::size_t k = 0; k < 8; ++k) {
      const double v = in[((2 * i + k) % n) * stride];
      a += db4_lowpass[k] * v;
      d += db4_highpass[k] * v;
    }
    buf[i] = a;
    buf[half + i] = d;
  }
  for (std::size_t i = 0; i < n; ++i) out[i * stride] = buf[i];
}

// Exact transpose of analyze_1d.
inline void synthesize_1d(const double* in, double* out, std::size_t n, std::size_t stride,
                          std::vector<double>& buf) {
  buf.assign(n, 0.0);
  const std::size_t half = n / 2;
  for (std::size_t i = 0; i < half; ++i) {
    const double a = in[i * stride];
    const double d = in[(half + i) * stride];
    for (std::size_t k = 0; k < 8; ++k) {
      buf[(2 * i + k) % n] += db4_lowpass[k] * a + db4_highpass[k] * d;
    }
  }
  for (std::size_t i = 0; i < n; ++i) out[i * stride] = buf[i];
}

inline void check_wavelet_shape(Shape s, int levels) {
  if (levels < 1) throw ParameterError("wavelet levels must be >= 1");
  const std::size_t block = std::size_t(1) << levels;
  if (s.rows % block != 0 || s.cols % block != 0)
    throw ParameterError("image " + to_string(s) + " not divisible by 2^" +
                         std::to_string(levels));
}

} // namespace detail

/// Orthogonal periodic 2D wavelet analysis in Mallat layout: the
/// approximation occupies the top-left (rows >> levels) x (cols >> levels)
/// block, details surround it, finest level outermost.
inline Image dwt2_packed(const Image& img, int levels) {
  detail::check_wavelet_shape(img.shape(), levels);
  Image c = img;
  std::vector<double> buf;
  std::size_t R = img.rows(), C = img.cols();
  const std::size_t stride = img.cols();
  for (int l = 0; l < levels; ++l) {
    for (std::size_t r = 0; r < R; ++r) detail::analyze_1d(&c(r, 0), &c(r, 0), C, 1, buf);
    for (std::size_t col = 0; col < C; ++col)
      detail::analyze_1d(&c(0, col), &c(0, col), R, stride, buf);
    R /= 2;
    C /= 2;
  }
  return c;
}

inline Image idwt2_packed(const Image& coeffs, int levels) {
  detail::check_wavelet_shape(coeffs.shape(), levels);
  Image x = coeffs;
  std::vector<double> buf;
  const std::size_t stride = coeffs.cols();
  for (int l = levels - 1; l >= 0; --l) {
    const std::size_t R = coeffs.rows() >> l, C = coeffs.cols() >> l;
    for (std::size_t col = 0; col < C; ++col)
      detail::synthesize_1d(&x(0, col), &x(0, col), R, stride, buf);
    for (std::size_t r = 0; r < R; ++r) detail::synthesize_1d(&x(r, 0), &x(r, 0), C, 1, buf);
  }
  return x;
}

/// Detail bands of one decomposition level. `horizontal` holds row-lowpass /
/// column-highpass responses, `diagonal` highpass in both directions.
struct DetailLevel {
  Image horizontal;
  Image vertical;
  Image diagonal;
};

struct Subbands {
  Shape image_shape;
  Image approximation;
  std::vector<DetailLevel> details;  // index 0 = finest

  int levels() const noexcept { return int(details.size()); }
};

inline Subbands dwt2(const Image& img, int levels) {
  const Image c = dwt2_packed(img, levels);
  Subbands sb;
  sb.image_shape = img.shape();
  for (int l = 0; l < levels; ++l) {
    const std::size_t R = img.rows() >> (l + 1), C = img.cols() >> (l + 1);
    sb.details.push_back({crop(c, R, 0, {R, C}), crop(c, 0, C, {R, C}), crop(c, R, C, {R, C})});
  }
  const std::size_t R = img.rows() >> levels, C = img.cols() >> levels;
  sb.approximation = crop(c, 0, 0, {R, C});
  return sb;
}

inline Image idwt2(const Subbands& sb) {
  const int levels = sb.levels();
  detail::check_wavelet_shape(sb.image_shape, levels);
  Image c(sb.image_shape);
  auto paste = [&c](const Image& block, std::size_t r0, std::size_t c0) {
    if (r0 + block.rows() > c.rows() || c0 + block.cols() > c.cols())
      throw ContractError("subband does not fit the declared image shape");
    for (std::size_t r = 0; r < block.rows(); ++r)
      for (std::size_t k = 0; k < block.cols(); ++k) c(r0 + r, c0 + k) = block(r, k);
  };
  for (int l = 0; l < levels; ++l) {
    const std::size_t R = sb.image_shape.rows >> (l + 1), C = sb.image_shape.cols >> (l + 1);
    const auto& d = sb.details[std::size_t(l)];
    if (d.horizontal.shape() != Shape{R, C} || d.vertical.shape() != Shape{R, C} ||
        d.diagonal.shape() != Shape{R, C})
      throw ContractError("detail subband shape mismatch at level " + std::to_string(l));
    paste(d.horizontal, R, 0);
    paste(d.vertical, 0, C);
    paste(d.diagonal, R, C);
  }
  if (sb.approximation.shape() !=
      Shape{sb.image_shape.rows >> levels, sb.image_shape.cols >> levels})
    throw ContractError("approximation subband shape mismatch");
  paste(sb.approximation, 0, 0);
  return idwt2_packed(c, levels);
}

/// Analysis as a LinearOperator on the packed layout; synthesis is its adjoint.
inline LinearOperator wavelet_operator(Shape shape, int levels) {
  detail::check_wavelet_shape(shape, levels);
  return {shape, shape, [levels](const Image& x) { return dwt2_packed(x, levels); },
          [levels](const Image& c) { return idwt2_packed(c, levels); }, "dwt2"};
}

} // namespace cps
