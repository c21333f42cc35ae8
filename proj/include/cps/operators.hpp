#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <memory>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cps/errors.hpp"
#include "cps/image.hpp"

namespace cps {

/// Linear map between 2D signals with an explicit adjoint. Immutable once
/// built; apply/adjoint are pure and check shapes on entry.
class LinearOperator {
public:
  using Map = std::function<Image(const Image&)>;

  LinearOperator() = default;
  LinearOperator(Shape in, Shape out, Map fwd, Map adj, std::string name = "op")
      : in_(in), out_(out), fwd_(std::move(fwd)), adj_(std::move(adj)), name_(std::move(name)) {}

  const Shape& in_shape() const noexcept { return in_; }
  const Shape& out_shape() const noexcept { return out_; }
  const std::string& name() const noexcept { return name_; }

  Image apply(const Image& x) const {
    if (x.shape() != in_)
      throw ContractError(name_ + ": apply expects " + to_string(in_) + ", got " +
                          to_string(x.shape()));
    return fwd_(x);
  }

  Image adjoint(const Image& y) const {
    if (y.shape() != out_)
      throw ContractError(name_ + ": adjoint expects " + to_string(out_) + ", got " +
                          to_string(y.shape()));
    return adj_(y);
  }

private:
  Shape in_;
  Shape out_;
  Map fwd_;
  Map adj_;
  std::string name_;
};

inline LinearOperator identity_operator(Shape shape) {
  auto id = [](const Image& x) { return x; };
  return {shape, shape, id, id, "identity"};
}

inline LinearOperator scaling_operator(Shape shape, double factor) {
  auto f = [factor](const Image& x) { return x * factor; };
  return {shape, shape, f, f, "scale"};
}

/// outer . inner
inline LinearOperator compose(const LinearOperator& outer, const LinearOperator& inner) {
  if (inner.out_shape() != outer.in_shape())
    throw ContractError("compose: " + inner.name() + " output " + to_string(inner.out_shape()) +
                        " does not feed " + outer.name() + " input " +
                        to_string(outer.in_shape()));
  return {inner.in_shape(), outer.out_shape(),
          [outer, inner](const Image& x) { return outer.apply(inner.apply(x)); },
          [outer, inner](const Image& y) { return inner.adjoint(outer.adjoint(y)); },
          outer.name() + "*" + inner.name()};
}

// ---------------------------------------------------------------------------
// Blur

/// Normalised size x size Gaussian stencil.
inline Image gaussian_psf(int size, double std_dev) {
  if (size < 1 || size % 2 == 0) throw ParameterError("psf size must be odd and >= 1");
  if (!(std_dev > 0.0)) throw ParameterError("psf standard deviation must be positive");
  const int r = size / 2;
  Image k(static_cast<std::size_t>(size), static_cast<std::size_t>(size));
  double total = 0.0;
  for (int i = -r; i <= r; ++i)
    for (int j = -r; j <= r; ++j) {
      const double v = std::exp(-(i * i + j * j) / (2.0 * std_dev * std_dev));
      k(std::size_t(i + r), std::size_t(j + r)) = v;
      total += v;
    }
  return k * (1.0 / total);
}

/// Centred single-tap kernel.
inline Image delta_psf() { return Image(1, 1, 1.0); }

namespace detail {

// y(i,j) = sum_{a,b} k(a,b) x(i - sign*a, j - sign*b) on a periodic grid,
// with (a,b) measured from the kernel centre. sign = +1 is convolution,
// sign = -1 correlation (the adjoint).
inline Image circular_filter(const Image& x, const Image& kernel, int sign) {
  const long R = long(x.rows()), C = long(x.cols());
  const long kr = long(kernel.rows()) / 2, kc = long(kernel.cols()) / 2;
  Image y(x.shape());
  for (long a = -kr; a <= kr; ++a)
    for (long b = -kc; b <= kc; ++b) {
      const double w = kernel(std::size_t(a + kr), std::size_t(b + kc));
      if (w == 0.0) continue;
      const long shift = ((-sign * b) % C + C) % C;  // source column = j + shift (mod C)
      for (long i = 0; i < R; ++i) {
        const long si = ((i - sign * a) % R + R) % R;
        const double* src = &x(std::size_t(si), 0);
        double* dst = &y(std::size_t(i), 0);
        const long split = C - shift;
        for (long j = 0; j < split; ++j) dst[j] += w * src[j + shift];
        for (long j = split; j < C; ++j) dst[j] += w * src[j + shift - C];
      }
    }
  return y;
}

} // namespace detail

/// Circular 2D convolution. The adjoint is correlation with the same
/// kernel, which is exact on the periodic grid.
inline LinearOperator blur_operator(const Image& kernel, Shape image_shape) {
  if (kernel.rows() % 2 == 0 || kernel.cols() % 2 == 0)
    throw ParameterError("blur kernel dimensions must be odd");
  if (kernel.rows() > image_shape.rows || kernel.cols() > image_shape.cols)
    throw ParameterError("blur kernel " + to_string(kernel.shape()) + " larger than image " +
                         to_string(image_shape));
  return {image_shape, image_shape,
          [kernel](const Image& x) { return detail::circular_filter(x, kernel, +1); },
          [kernel](const Image& y) { return detail::circular_filter(y, kernel, -1); }, "blur"};
}

/// Keep every factor-th sample starting at index 0; the adjoint zero-fills.
inline LinearOperator downsample_operator(int factor, Shape hi_shape) {
  if (factor < 1) throw ParameterError("downsampling factor must be >= 1");
  const auto f = std::size_t(factor);
  if (hi_shape.rows % f != 0 || hi_shape.cols % f != 0)
    throw ParameterError("downsampling factor " + std::to_string(factor) +
                         " does not divide " + to_string(hi_shape));
  const Shape lo{hi_shape.rows / f, hi_shape.cols / f};
  return {hi_shape, lo,
          [f, lo](const Image& x) {
            Image y(lo);
            for (std::size_t r = 0; r < lo.rows; ++r)
              for (std::size_t c = 0; c < lo.cols; ++c) y(r, c) = x(r * f, c * f);
            return y;
          },
          [f, lo, hi_shape](const Image& y) {
            Image x(hi_shape);
            for (std::size_t r = 0; r < lo.rows; ++r)
              for (std::size_t c = 0; c < lo.cols; ++c) x(r * f, c * f) = y(r, c);
            return x;
          },
          "downsample"};
}

// ---------------------------------------------------------------------------
// Dense matrices

/// Row-major dense matrix.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }

  static DenseMatrix from_rows(const std::vector<std::vector<double>>& rows_in) {
    DenseMatrix m;
    m.rows = rows_in.size();
    m.cols = rows_in.empty() ? 0 : rows_in.front().size();
    for (std::size_t r = 0; r < rows_in.size(); ++r) {
      if (rows_in[r].size() != m.cols)
        throw FormatError("matrix row " + std::to_string(r) + " has " +
                          std::to_string(rows_in[r].size()) + " entries, expected " +
                          std::to_string(m.cols));
      m.values.insert(m.values.end(), rows_in[r].begin(), rows_in[r].end());
    }
    return m;
  }
};

/// y = M vec(x), vec row-major. `in_shape` must hold M.cols samples; the
/// output is an M.rows x 1 column.
inline LinearOperator matrix_operator(DenseMatrix m, Shape in_shape) {
  if (m.rows == 0 || m.cols == 0) throw FormatError("empty matrix");
  if (m.values.size() != m.rows * m.cols) throw FormatError("matrix storage is not rectangular");
  for (double v : m.values)
    if (!std::isfinite(v)) throw InputError("matrix contains non-finite entries");
  if (in_shape.size() != m.cols)
    throw ContractError("matrix with " + std::to_string(m.cols) + " columns cannot act on " +
                        to_string(in_shape));
  const Shape out{m.rows, 1};
  auto shared = std::make_shared<const DenseMatrix>(std::move(m));
  return {in_shape, out,
          [shared, out](const Image& x) {
            const auto& M = *shared;
            Image y(out);
            for (std::size_t r = 0; r < M.rows; ++r) {
              const double* row = &M.values[r * M.cols];
              double acc = 0.0;
              for (std::size_t c = 0; c < M.cols; ++c) acc += row[c] * x[c];
              y[r] = acc;
            }
            return y;
          },
          [shared, in_shape](const Image& y) {
            const auto& M = *shared;
            Image x(in_shape);
            for (std::size_t r = 0; r < M.rows; ++r) {
              const double* row = &M.values[r * M.cols];
              const double yr = y[r];
              for (std::size_t c = 0; c < M.cols; ++c) x[c] += row[c] * yr;
            }
            return x;
          },
          "matrix"};
}

inline LinearOperator matrix_operator(DenseMatrix m) {
  const Shape in{m.cols, 1};
  return matrix_operator(std::move(m), in);
}

/// Header-free, comma separated, one matrix row per line.
inline DenseMatrix parse_matrix_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw FormatError("line " + std::to_string(lineno) + ": cannot parse '" + cell + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError("no matrix rows found");
  return DenseMatrix::from_rows(rows);
}

inline DenseMatrix read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open matrix file '" + path + "'");
  return parse_matrix_csv(in);
}

/// Gaussian sensing matrix with N(0, 1/m) entries, fixed by `seed`.
inline LinearOperator random_measurement_operator(std::size_t m, Shape n_shape, std::uint64_t seed) {
  const std::size_t n = n_shape.size();
  if (m == 0 || m > n)
    throw ParameterError("measurement count " + std::to_string(m) + " must be in [1, " +
                         std::to_string(n) + "]");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(double(m)));
  DenseMatrix M{m, n, std::vector<double>(m * n)};
  for (auto& v : M.values) v = normal(rng);
  return matrix_operator(std::move(M), n_shape);
}

// ---------------------------------------------------------------------------
// Verification

inline Image random_image(Shape shape, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Image x(shape);
  for (auto& v : x) v = normal(rng);
  return x;
}

/// Largest |<Ax,y> - <x,A^T y>| / (|<Ax,y>| + |<x,A^T y>|) over seeded
/// random probes. An adjoint off by a factor of 2 scores 1/3.
inline double adjoint_dot_test(const LinearOperator& op, int trials, std::uint64_t seed) {
  if (trials < 1) throw ParameterError("adjoint_dot_test needs at least one trial");
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const Image x = random_image(op.in_shape(), rng);
    const Image y = random_image(op.out_shape(), rng);
    const Image ax = op.apply(x);
    const double lhs = dot(ax, y);
    const double rhs = dot(x, op.adjoint(y));
    const double denom = std::abs(lhs) + std::abs(rhs) + std::numeric_limits<double>::min();
    worst = std::max(worst, std::abs(lhs - rhs) / denom);
  }
  return worst;
}

} // namespace cps
