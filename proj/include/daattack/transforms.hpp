#ifndef DAATTACK_TRANSFORMS_HPP
#define DAATTACK_TRANSFORMS_HPP

#include <cmath>
#include <numbers>
#include <string>

#include "errors.hpp"
#include "rng.hpp"
#include "tensor.hpp"

namespace daa {

/// Diverse-input transform: with probability p, shrink by a random factor in
/// [min_scale, 1] (nearest neighbour) and zero-pad back at a random offset.
struct DimSpec {
  double p = 0.5;
  double min_scale = 0.85;

  void validate() const {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("dim: probability must be in [0,1]");
    if (!(min_scale > 0.0 && min_scale <= 1.0)) throw ConfigError("dim: min_scale must be in (0,1]");
  }
};

/// One realisation of the DIM transform; a linear map on images, so it has an adjoint.
struct DimDraw {
  bool applied = false;
  std::size_t rows = 0, cols = 0;  // resized size
  std::size_t top = 0, left = 0;   // paste offset
};

inline DimDraw draw_dim(const DimSpec& spec, std::size_t H, std::size_t W, RngStream& rng) {
  spec.validate();
  DimDraw d;
  if (!(rng.uniform() < spec.p)) return d;
  const auto r_min = static_cast<std::size_t>(std::ceil(spec.min_scale * static_cast<double>(H)));
  d.applied = true;
  d.rows = rng.uniform_int(std::max<std::size_t>(1, r_min), H);
  d.cols = H == W ? d.rows : std::max<std::size_t>(1, (d.rows * W + H / 2) / H);
  d.top = rng.uniform_int(0, H - d.rows);
  d.left = rng.uniform_int(0, W - d.cols);
  return d;
}

inline Tensor apply_dim(const Tensor& x, const DimDraw& d) {
  if (!d.applied) return x;
  return pad_at(resize_nearest(x, d.rows, d.cols), x.dim(1), x.dim(2), d.top, d.left);
}

/// Transpose of apply_dim: routes a gradient w.r.t. T(x) back to x.
inline Tensor dim_adjoint(const Tensor& g, const DimDraw& d) {
  if (!d.applied) return g;
  const std::size_t C = g.dim(0), H = g.dim(1), W = g.dim(2);
  Tensor out(g.shape());
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t i = 0; i < d.rows; ++i)
      for (std::size_t j = 0; j < d.cols; ++j)
        out.at(c, i * H / d.rows, j * W / d.cols) += g.at(c, d.top + i, d.left + j);
  return out;
}

inline Tensor dim_transform(const Tensor& x, const DimSpec& spec, RngStream& rng) {
  if (x.rank() != 3) throw StructuralError("dim_transform: input must be [C,H,W]");
  return apply_dim(x, draw_dim(spec, x.dim(1), x.dim(2), rng));
}

/// Normalised (2k+1)x(2k+1) smoothing kernel for the translation-invariant attack.
struct KernelSpec {
  std::size_t radius = 0;
  double sigma = 0.0;  // 0 for the delta kernel
  Tensor weights;      // [2k+1, 2k+1], sums to 1

  std::size_t size() const noexcept { return 2 * radius + 1; }
};

/// Gaussian kernel with sigma = k / sqrt(3).
inline KernelSpec gaussian_kernel(std::size_t k) {
  if (k == 0) throw ConfigError("gaussian_kernel: radius must be >= 1 (use the delta kernel for identity)");
  KernelSpec ks;
  ks.radius = k;
  ks.sigma = static_cast<double>(k) / std::sqrt(3.0);
  const std::size_t n = 2 * k + 1;
  ks.weights = Tensor({n, n});
  const double s2 = ks.sigma * ks.sigma;
  const long r = static_cast<long>(k);
  for (long i = -r; i <= r; ++i)
    for (long j = -r; j <= r; ++j)
      ks.weights[(i + r) * n + (j + r)] =
          std::exp(-static_cast<double>(i * i + j * j) / (2.0 * s2)) / (2.0 * std::numbers::pi * s2);
  ks.weights *= 1.0 / sum(ks.weights);
  return ks;
}

/// Kernel with a single 1 at the centre; smoothing with it is the identity.
inline KernelSpec delta_kernel(std::size_t k = 0) {
  KernelSpec ks;
  ks.radius = k;
  const std::size_t n = 2 * k + 1;
  ks.weights = Tensor({n, n});
  ks.weights[k * n + k] = 1.0;
  return ks;
}

/// Image-size-dependent default radius: 1 up to 16 px, 3 from 28 px (7x7).
inline std::size_t default_kernel_radius(std::size_t hw) { return hw >= 28 ? 3 : (hw > 16 ? 2 : 1); }

/// Per-channel zero-padded cross-correlation of a gradient field with the kernel.
inline Tensor smooth_gradient(const Tensor& g, const KernelSpec& kernel) {
  if (g.rank() != 3) throw StructuralError("smooth_gradient: gradient must be [C,H,W]");
  if (kernel.size() > std::min(g.dim(1), g.dim(2)))
    throw ConfigError("smooth_gradient: kernel " + std::to_string(kernel.size()) + "x" +
                      std::to_string(kernel.size()) + " larger than image");
  return conv2d_same(g, kernel.weights);
}

}  // namespace daa

#endif  // DAATTACK_TRANSFORMS_HPP
