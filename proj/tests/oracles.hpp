// Independent reference implementations for the unit and acceptance tests.
// Written as plain loops against the definitions; they share no code path
// with the library beyond the data types.
#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <vector>

#include "daattack/net.hpp"
#include "daattack/rng.hpp"
#include "daattack/tensor.hpp"

namespace oracle {

using daa::Tensor;

inline double sgn(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

// Direct 2-D cross-correlation with zero padding, kernel [k,k], input [C,H,W].
inline Tensor conv_same(const Tensor& t, const Tensor& kern) {
  const long C = static_cast<long>(t.dim(0)), H = static_cast<long>(t.dim(1)), W = static_cast<long>(t.dim(2));
  const long k = static_cast<long>(kern.dim(0)), r = k / 2;
  Tensor out(t.shape());
  for (long c = 0; c < C; ++c)
    for (long h = 0; h < H; ++h)
      for (long w = 0; w < W; ++w) {
        double s = 0.0;
        for (long i = 0; i < k; ++i)
          for (long j = 0; j < k; ++j) {
            const long y = h + i - r, x = w + j - r;
            if (y < 0 || y >= H || x < 0 || x >= W) continue;
            s += kern[static_cast<std::size_t>(i * k + j)] * t[static_cast<std::size_t>((c * H + y) * W + x)];
          }
        out.data()[static_cast<std::size_t>((c * H + h) * W + w)] = s;
      }
  return out;
}

// Unnormalised then normalised Gaussian with sigma = k / sqrt(3), evaluated from the formula.
inline std::vector<double> gaussian_weights(std::size_t k) {
  const double sigma = static_cast<double>(k) / std::sqrt(3.0);
  const long K = static_cast<long>(k);
  std::vector<double> w;
  double total = 0.0;
  for (long i = -K; i <= K; ++i)
    for (long j = -K; j <= K; ++j) {
      const double v = 1.0 / (2.0 * std::numbers::pi * sigma * sigma) *
                       std::exp(-static_cast<double>(i * i + j * j) / (2.0 * sigma * sigma));
      w.push_back(v);
      total += v;
    }
  for (double& v : w) v /= total;
  return w;
}

// Naive forward pass straight from the layer table.
inline std::vector<double> forward(const daa::Classifier& m, const std::vector<double>& input) {
  std::vector<double> a = input;
  daa::Shape shape = m.input_shape();
  for (std::size_t li = 0; li < m.spec().layers.size(); ++li) {
    const auto& l = m.spec().layers[li];
    const auto& p = m.params()[li];
    switch (l.kind) {
      case daa::LayerKind::dense: {
        std::vector<double> y(l.out);
        for (std::size_t o = 0; o < l.out; ++o) {
          double s = p.bias[o];
          for (std::size_t i = 0; i < l.in; ++i) s += p.weight[o * l.in + i] * a[i];
          y[o] = s;
        }
        a = std::move(y);
        shape = {l.out};
        break;
      }
      case daa::LayerKind::conv: {
        const long H = static_cast<long>(shape[1]), W = static_cast<long>(shape[2]), k = static_cast<long>(l.k);
        const long r = k / 2;
        std::vector<double> y(l.out * shape[1] * shape[2]);
        for (std::size_t o = 0; o < l.out; ++o)
          for (long h = 0; h < H; ++h)
            for (long w = 0; w < W; ++w) {
              double s = p.bias[o];
              for (std::size_t c = 0; c < l.in; ++c)
                for (long i = 0; i < k; ++i)
                  for (long j = 0; j < k; ++j) {
                    const long yy = h + i - r, xx = w + j - r;
                    if (yy < 0 || yy >= H || xx < 0 || xx >= W) continue;
                    s += p.weight[((o * l.in + c) * l.k + static_cast<std::size_t>(i)) * l.k + static_cast<std::size_t>(j)] *
                         a[(c * shape[1] + static_cast<std::size_t>(yy)) * shape[2] + static_cast<std::size_t>(xx)];
                  }
              y[(o * shape[1] + static_cast<std::size_t>(h)) * shape[2] + static_cast<std::size_t>(w)] = s;
            }
        a = std::move(y);
        shape = {l.out, shape[1], shape[2]};
        break;
      }
      case daa::LayerKind::relu:
        for (double& v : a) v = std::max(v, 0.0);
        break;
      case daa::LayerKind::flatten:
        shape = {a.size()};
        break;
    }
  }
  return a;
}

// -log softmax(z)[y] via long-double log-sum-exp.
inline double cross_entropy(const std::vector<double>& z, std::size_t y) {
  long double mx = *std::max_element(z.begin(), z.end());
  long double s = 0;
  for (double v : z) s += std::exp(static_cast<long double>(v) - mx);
  return static_cast<double>(std::log(s) + mx - static_cast<long double>(z[y]));
}

inline double loss(const daa::Classifier& m, const std::vector<double>& x, std::size_t y) {
  return cross_entropy(forward(m, x), y);
}

// Central finite differences of the loss w.r.t. every input coordinate.
inline std::vector<double> fd_input_gradient(const daa::Classifier& m, const Tensor& x, std::size_t y, double h = 1e-5) {
  std::vector<double> v(x.data().begin(), x.data().end()), g(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double keep = v[i];
    v[i] = keep + h;
    const double up = loss(m, v, y);
    v[i] = keep - h;
    const double dn = loss(m, v, y);
    v[i] = keep;
    g[i] = (up - dn) / (2 * h);
  }
  return g;
}

// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor).
inline double max_rel_error(const std::vector<double>& a, std::span<const double> b, double floor = 1e-6) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double den = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / den);
  }
  return worst;
}

// Projection onto {o : max(x-eps, lo) <= o <= min(x+eps, hi)} per element.
inline double clip(double xs, double x, double eps, double lo, double hi) {
  const double a = std::max(x - eps, lo), b = std::min(x + eps, hi);
  if (a > b) return std::clamp(xs, lo, hi);
  return std::min(std::max(xs, a), b);
}

inline double ratio(const std::vector<std::set<std::size_t>>& normal, const std::set<std::size_t>& robust, bool& defined) {
  std::vector<std::size_t> uni;
  for (const auto& s : normal)
    for (auto v : s)
      if (std::find(uni.begin(), uni.end(), v) == uni.end()) uni.push_back(v);
  defined = !uni.empty();
  if (!defined) return 0.0;
  std::size_t both = 0;
  for (auto v : uni) both += std::count(robust.begin(), robust.end(), v);
  return static_cast<double>(both) / static_cast<double>(uni.size());
}

// Random dense/conv network for gradient checks.
inline daa::Classifier random_model(daa::RngStream& rng, bool conv) {
  using daa::LayerSpec;
  daa::ModelSpec spec;
  if (conv) {
    spec.input_shape = {1, 5, 5};
    spec.layers = {LayerSpec::conv(1, 2, 3), LayerSpec::relu(), LayerSpec::flatten(), LayerSpec::dense(50, 6),
                   LayerSpec::relu(), LayerSpec::dense(6, 3)};
  } else {
    spec.input_shape = {1, 3, 3};
    spec.layers = {LayerSpec::flatten(), LayerSpec::dense(9, 7), LayerSpec::relu(), LayerSpec::dense(7, 5),
                   LayerSpec::relu(), LayerSpec::dense(5, 4)};
  }
  daa::Classifier m(spec, rng);
  for (auto& p : m.params()) {
    for (double& v : p.bias.data()) v = rng.uniform(-0.3, 0.3);
  }
  return m;
}

inline Tensor random_tensor(const daa::Shape& s, daa::RngStream& rng, double lo = 0.0, double hi = 1.0) {
  Tensor t(s);
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

}  // namespace oracle
