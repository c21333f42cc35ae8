#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "cps/errors.hpp"

namespace cps {

/// Row/column extent of a 2D signal.
struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const noexcept { return rows * cols; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

inline std::string to_string(const Shape& s) {
  return std::to_string(s.rows) + "x" + std::to_string(s.cols);
}

/// Dense row-major real 2D grid. Holds images, sinograms, wavelet
/// coefficients and flat measurement vectors (as N x 1).
class Image {
public:
  Image() = default;
  explicit Image(Shape shape, double fill = 0.0)
      : shape_(shape), data_(shape.size(), fill) {}
  Image(std::size_t rows, std::size_t cols, double fill = 0.0)
      : Image(Shape{rows, cols}, fill) {}
  Image(Shape shape, std::vector<double> data) : shape_(shape), data_(std::move(data)) {
    if (data_.size() != shape_.size())
      throw ContractError("image data size " + std::to_string(data_.size()) +
                          " does not match shape " + to_string(shape_));
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rows() const noexcept { return shape_.rows; }
  std::size_t cols() const noexcept { return shape_.cols; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * shape_.cols + c]; }
  const double& operator()(std::size_t r, std::size_t c) const { return data_[r * shape_.cols + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  const double& operator[](std::size_t i) const { return data_[i]; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  Image& operator+=(const Image& o) {
    check_same(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  Image& operator-=(const Image& o) {
    check_same(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  Image& operator*=(double s) {
    for (auto& v : data_) v *= s;
    return *this;
  }

  friend Image operator+(Image a, const Image& b) { return a += b; }
  friend Image operator-(Image a, const Image& b) { return a -= b; }
  friend Image operator*(Image a, double s) { return a *= s; }
  friend Image operator*(double s, Image a) { return a *= s; }

  friend bool operator==(const Image&, const Image&) = default;

  void check_same(const Image& o) const {
    if (o.shape_ != shape_)
      throw ContractError("shape mismatch: " + to_string(shape_) + " vs " + to_string(o.shape_));
  }

private:
  Shape shape_;
  std::vector<double> data_;
};

inline double dot(const Image& a, const Image& b) {
  a.check_same(b);
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline double squared_norm(const Image& a) { return dot(a, a); }
inline double norm(const Image& a) { return std::sqrt(squared_norm(a)); }

inline double sum(const Image& a) { return std::accumulate(a.begin(), a.end(), 0.0); }
inline double mean(const Image& a) { return a.empty() ? 0.0 : sum(a) / double(a.size()); }

inline double variance(const Image& a) {
  if (a.empty()) return 0.0;
  const double m = mean(a);
  double acc = 0.0;
  for (double v : a) acc += (v - m) * (v - m);
  return acc / double(a.size());
}

inline double min_value(const Image& a) { return *std::min_element(a.begin(), a.end()); }
inline double max_value(const Image& a) { return *std::max_element(a.begin(), a.end()); }

inline bool all_finite(const Image& a) {
  return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

template <class F>
Image map(const Image& a, F&& f) {
  Image out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

/// Elementwise product.
inline Image hadamard(const Image& a, const Image& b) {
  a.check_same(b);
  Image out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

/// Median of a copy of the values. Empty input returns 0.
inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + mid));
  }
  return m;
}

/// Median absolute deviation about the median (unscaled).
inline double mad(const std::vector<double>& v) {
  const double m = median(v);
  std::vector<double> dev(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) dev[i] = std::abs(v[i] - m);
  return median(std::move(dev));
}

/// Sub-block copy.
inline Image crop(const Image& img, std::size_t r0, std::size_t c0, Shape shape) {
  if (r0 + shape.rows > img.rows() || c0 + shape.cols > img.cols())
    throw ContractError("crop window exceeds image " + to_string(img.shape()));
  Image out(shape);
  for (std::size_t r = 0; r < shape.rows; ++r)
    for (std::size_t c = 0; c < shape.cols; ++c) out(r, c) = img(r0 + r, c0 + c);
  return out;
}

/// Symmetric (half-sample) padding at the bottom/right up to `shape`.
inline Image pad_symmetric(const Image& img, Shape shape) {
  if (shape.rows < img.rows() || shape.cols < img.cols())
    throw ContractError("padding target smaller than image");
  auto reflect = [](std::size_t i, std::size_t n) {
    const std::size_t period = 2 * n;
    i %= period;
    return i < n ? i : period - 1 - i;
  };
  Image out(shape);
  for (std::size_t r = 0; r < shape.rows; ++r)
    for (std::size_t c = 0; c < shape.cols; ++c)
      out(r, c) = img(reflect(r, img.rows()), reflect(c, img.cols()));
  return out;
}

} // namespace cps
