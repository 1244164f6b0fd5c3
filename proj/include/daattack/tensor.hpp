#ifndef DAATTACK_TENSOR_HPP
#define DAATTACK_TENSOR_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "rng.hpp"

namespace daa {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

/// Dense row-major array of doubles.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape, double fill = 0.0)
      : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

  Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_size(shape_) != data_.size())
      throw StructuralError("tensor: shape " + shape_str(shape_) + " does not match " +
                            std::to_string(data_.size()) + " values");
  }

  static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape_); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  // [C,H,W] accessors.
  double& at(std::size_t c, std::size_t h, std::size_t w) noexcept {
    return data_[(c * shape_[1] + h) * shape_[2] + w];
  }
  double at(std::size_t c, std::size_t h, std::size_t w) const noexcept {
    return data_[(c * shape_[1] + h) * shape_[2] + w];
  }

  Tensor reshaped(Shape s) const& { return Tensor(std::move(s), data_); }
  Tensor reshaped(Shape s) && { return Tensor(std::move(s), std::move(data_)); }

  /// Slice i of the leading dimension, e.g. example i of a batch.
  Tensor slice(std::size_t i) const {
    if (rank() == 0 || i >= shape_[0]) throw StructuralError("tensor: slice out of range");
    Shape inner(shape_.begin() + 1, shape_.end());
    const std::size_t n = shape_size(inner);
    return Tensor(std::move(inner), std::vector<double>(data_.begin() + i * n, data_.begin() + (i + 1) * n));
  }

  Tensor& operator+=(const Tensor& o) {
    require_same(o, "+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  Tensor& operator-=(const Tensor& o) {
    require_same(o, "-=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  Tensor& operator*=(double s) noexcept {
    for (double& v : data_) v *= s;
    return *this;
  }

  /// this += s * o
  Tensor& axpy(double s, const Tensor& o) {
    require_same(o, "axpy");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += s * o.data_[i];
    return *this;
  }

  bool operator==(const Tensor&) const = default;

  void require_same(const Tensor& o, const char* op) const {
    if (shape_ != o.shape_)
      throw StructuralError(std::string("tensor ") + op + ": shape mismatch " + shape_str(shape_) + " vs " +
                            shape_str(o.shape_));
  }

 private:
  Shape shape_;
  std::vector<double> data_;
};

inline Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
inline Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
inline Tensor operator*(Tensor a, double s) { return a *= s; }
inline Tensor operator*(double s, Tensor a) { return a *= s; }

inline Tensor hadamard(Tensor a, const Tensor& b) {
  a.require_same(b, "hadamard");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] *= b[i];
  return a;
}

inline double sign(double v) noexcept { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

/// Elementwise sign with sign(0) = 0.
inline Tensor sign(Tensor t) {
  for (double& v : t.data()) v = sign(v);
  return t;
}

inline double sum(const Tensor& t) noexcept {
  double s = 0.0;
  for (double v : t.data()) s += v;
  return s;
}

inline double max(const Tensor& t) {
  if (t.empty()) throw ArgumentError("max of empty tensor");
  return *std::max_element(t.data().begin(), t.data().end());
}

inline double max_abs(const Tensor& t) noexcept {
  double m = 0.0;
  for (double v : t.data()) m = std::max(m, std::abs(v));
  return m;
}

inline double l1_norm(const Tensor& t) noexcept {
  double s = 0.0;
  for (double v : t.data()) s += std::abs(v);
  return s;
}

inline double dot(const Tensor& a, const Tensor& b) {
  if (a.size() != b.size()) throw StructuralError("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double l2_norm(const Tensor& t) noexcept { return std::sqrt(dot(t, t)); }

/// [m,k] x [k,n] -> [m,n]
inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
    throw StructuralError("matmul: incompatible shapes " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += aip * b[p * n + j];
    }
  return out;
}

/// Numerically stable softmax over a 1-D tensor, or over each row of a 2-D one.
inline Tensor softmax(Tensor t) {
  if (t.rank() != 1 && t.rank() != 2) throw StructuralError("softmax: expects rank 1 or 2");
  const std::size_t rows = t.rank() == 1 ? 1 : t.dim(0);
  const std::size_t cols = t.rank() == 1 ? t.size() : t.dim(1);
  for (std::size_t r = 0; r < rows; ++r) {
    double* row = t.data().data() + r * cols;
    const double m = *std::max_element(row, row + cols);
    double z = 0.0;
    for (std::size_t j = 0; j < cols; ++j) z += (row[j] = std::exp(row[j] - m));
    for (std::size_t j = 0; j < cols; ++j) row[j] /= z;
  }
  return t;
}

inline std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

inline bool all_finite(const Tensor& t) noexcept {
  return std::all_of(t.data().begin(), t.data().end(), [](double v) { return std::isfinite(v); });
}

/// Projection onto {o : max(x-eps, lo) <= o <= min(x+eps, hi)}.
inline Tensor clip_ball_and_range(Tensor x_star, const Tensor& x, double epsilon, double lo = 0.0,
                                  double hi = 1.0) {
  x_star.require_same(x, "clip_ball_and_range");
  if (!(lo < hi)) throw ArgumentError("clip_ball_and_range: lo must be < hi");
  if (!(epsilon >= 0.0)) throw ArgumentError("clip_ball_and_range: epsilon must be >= 0");
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = std::max(x[i] - epsilon, lo);
    const double b = std::min(x[i] + epsilon, hi);
    // x itself outside [lo, hi] leaves an empty box; the range wins.
    x_star[i] = a <= b ? std::clamp(x_star[i], a, b) : (x[i] < lo ? lo : hi);
  }
  return x_star;
}

enum class NoiseKind { gaussian, uniform };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::gaussian;
  double sigma = 0.05;
  double low = -0.08;
  double high = 0.08;

  static NoiseSpec gaussian(double sigma) { return {NoiseKind::gaussian, sigma, 0.0, 0.0}; }
  static NoiseSpec uniform(double a, double b) { return {NoiseKind::uniform, 0.0, a, b}; }
};

/// i.i.d. noise. gaussian(0) returns exact zeros without consuming the stream.
inline Tensor sample_noise(const Shape& shape, const NoiseSpec& noise, RngStream& rng) {
  Tensor out(shape);
  if (noise.kind == NoiseKind::gaussian) {
    if (!(noise.sigma >= 0.0)) throw ArgumentError("sample_noise: sigma must be >= 0");
    if (noise.sigma == 0.0) return out;
    for (double& v : out.data()) v = noise.sigma * rng.normal();
  } else {
    if (!(noise.low <= noise.high)) throw ArgumentError("sample_noise: uniform bounds must satisfy a <= b");
    for (double& v : out.data()) v = rng.uniform(noise.low, noise.high);
  }
  return out;
}

/// Per-channel 2-D cross-correlation of t[C,H,W] with kernel[k,k], zero padding
/// of (k-1)/2 so the output keeps the input's spatial size.
inline Tensor conv2d_same(const Tensor& t, const Tensor& kernel) {
  if (t.rank() != 3) throw StructuralError("conv2d_same: input must be [C,H,W]");
  if (kernel.rank() != 2 || kernel.dim(0) != kernel.dim(1)) throw StructuralError("conv2d_same: kernel must be [k,k]");
  const std::size_t k = kernel.dim(0);
  if (k % 2 == 0) throw ConfigError("conv2d_same: kernel size must be odd, got " + std::to_string(k));
  const std::size_t C = t.dim(0), H = t.dim(1), W = t.dim(2);
  if (k > std::min(H, W)) throw ConfigError("conv2d_same: kernel larger than image");
  const long pad = static_cast<long>(k / 2);
  Tensor out(t.shape());
  for (std::size_t c = 0; c < C; ++c)
    for (long h = 0; h < static_cast<long>(H); ++h)
      for (long w = 0; w < static_cast<long>(W); ++w) {
        double acc = 0.0;
        for (long i = 0; i < static_cast<long>(k); ++i) {
          const long hh = h + i - pad;
          if (hh < 0 || hh >= static_cast<long>(H)) continue;
          for (long j = 0; j < static_cast<long>(k); ++j) {
            const long ww = w + j - pad;
            if (ww < 0 || ww >= static_cast<long>(W)) continue;
            acc += kernel[i * k + j] * t.at(c, hh, ww);
          }
        }
        out.at(c, h, w) = acc;
      }
  return out;
}

/// Nearest-neighbour resize of [C,H,W] to [C,out_h,out_w].
inline Tensor resize_nearest(const Tensor& t, std::size_t out_h, std::size_t out_w) {
  if (t.rank() != 3) throw StructuralError("resize_nearest: input must be [C,H,W]");
  if (out_h == 0 || out_w == 0) throw ArgumentError("resize_nearest: empty target size");
  const std::size_t C = t.dim(0), H = t.dim(1), W = t.dim(2);
  Tensor out({C, out_h, out_w});
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t i = 0; i < out_h; ++i)
      for (std::size_t j = 0; j < out_w; ++j) out.at(c, i, j) = t.at(c, i * H / out_h, j * W / out_w);
  return out;
}

/// Place t[C,h,w] into a zero canvas [C,H,W] with its top-left corner at (top, left).
inline Tensor pad_at(const Tensor& t, std::size_t H, std::size_t W, std::size_t top, std::size_t left) {
  if (t.rank() != 3) throw StructuralError("pad_at: input must be [C,H,W]");
  const std::size_t C = t.dim(0), h = t.dim(1), w = t.dim(2);
  if (top + h > H || left + w > W) throw StructuralError("pad_at: patch does not fit the canvas");
  Tensor out({C, H, W});
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < w; ++j) out.at(c, top + i, left + j) = t.at(c, i, j);
  return out;
}

/// Cosine of the angle between two flattened tensors; nullopt when either is zero.
inline std::optional<double> cosine(const Tensor& a, const Tensor& b) {
  const double na = l2_norm(a), nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) return std::nullopt;
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

}  // namespace daa

#endif  // DAATTACK_TENSOR_HPP
