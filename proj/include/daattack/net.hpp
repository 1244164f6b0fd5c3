#ifndef DAATTACK_NET_HPP
#define DAATTACK_NET_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "errors.hpp"
#include "rng.hpp"
#include "tensor.hpp"

namespace daa {

enum class LayerKind : std::uint8_t { dense = 1, conv = 2, relu = 3, flatten = 4 };

/// One layer of a feed-forward classifier.
///   dense:   in -> out features, weight [out,in], bias [out]
///   conv:    in -> out channels, k x k kernel (odd), stride 1, zero "same" padding,
///            weight [out,in,k,k], bias [out]
struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t k = 0;

  static LayerSpec dense(std::size_t in, std::size_t out) { return {LayerKind::dense, in, out, 0}; }
  static LayerSpec conv(std::size_t in_ch, std::size_t out_ch, std::size_t k) {
    return {LayerKind::conv, in_ch, out_ch, k};
  }
  static LayerSpec relu() { return {LayerKind::relu, 0, 0, 0}; }
  static LayerSpec flatten() { return {LayerKind::flatten, 0, 0, 0}; }

  bool has_params() const noexcept { return kind == LayerKind::dense || kind == LayerKind::conv; }

  bool operator==(const LayerSpec&) const = default;
};

/// Architecture: input shape plus layer table.
struct ModelSpec {
  Shape input_shape;
  std::vector<LayerSpec> layers;

  bool operator==(const ModelSpec&) const = default;
};

/// How a classifier was trained.
struct TrainingDescriptor {
  bool adversarial = false;
  double epsilon = 0.0;
  std::uint32_t steps = 0;

  bool operator==(const TrainingDescriptor&) const = default;
};

/// Output shape of every layer; throws StructuralError when the table does not compose.
inline std::vector<Shape> layer_shapes(const ModelSpec& spec) {
  std::vector<Shape> shapes{spec.input_shape};
  if (spec.input_shape.empty() || shape_size(spec.input_shape) == 0)
    throw StructuralError("model: empty input shape");
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    const Shape& s = shapes.back();
    const std::string where = "layer " + std::to_string(i) + ": ";
    switch (l.kind) {
      case LayerKind::dense:
        if (s.size() != 1 || s[0] != l.in)
          throw StructuralError(where + "dense expects [" + std::to_string(l.in) + "], got " + shape_str(s));
        if (l.out == 0) throw StructuralError(where + "dense with zero outputs");
        shapes.push_back({l.out});
        break;
      case LayerKind::conv:
        if (s.size() != 3 || s[0] != l.in)
          throw StructuralError(where + "conv expects [" + std::to_string(l.in) + ",H,W], got " + shape_str(s));
        if (l.k % 2 == 0 || l.k > std::min(s[1], s[2]))
          throw StructuralError(where + "conv kernel must be odd and fit the image");
        if (l.out == 0) throw StructuralError(where + "conv with zero output channels");
        shapes.push_back({l.out, s[1], s[2]});
        break;
      case LayerKind::relu:
        shapes.push_back(s);
        break;
      case LayerKind::flatten:
        shapes.push_back({shape_size(s)});
        break;
      default:
        throw StructuralError(where + "unknown layer kind");
    }
  }
  if (shapes.back().size() != 1 || shapes.back()[0] < 2)
    throw StructuralError("model: final layer must produce a logit vector with >= 2 classes");
  return shapes;
}

/// Learnable tensors of one layer (empty for relu/flatten).
struct LayerParams {
  Tensor weight;
  Tensor bias;
};

/// Parameter gradients, laid out like Classifier::params().
using ParamGradients = std::vector<LayerParams>;

/// A small feed-forward classifier with exact reverse-mode gradients.
class Classifier {
 public:
  Classifier() = default;

  /// He-uniform weights drawn from `rng`, zero biases.
  Classifier(ModelSpec spec, RngStream& rng) : spec_(std::move(spec)) {
    const auto shapes = layer_shapes(spec_);
    num_classes_ = shapes.back()[0];
    for (const LayerSpec& l : spec_.layers) {
      LayerParams p;
      if (l.kind == LayerKind::dense) {
        p.weight = Tensor({l.out, l.in});
        p.bias = Tensor({l.out});
        init_uniform(p.weight, std::sqrt(6.0 / static_cast<double>(l.in)), rng);
      } else if (l.kind == LayerKind::conv) {
        p.weight = Tensor({l.out, l.in, l.k, l.k});
        p.bias = Tensor({l.out});
        init_uniform(p.weight, std::sqrt(6.0 / static_cast<double>(l.in * l.k * l.k)), rng);
      }
      params_.push_back(std::move(p));
    }
  }

  /// Explicit parameters (deserialization, tests).
  Classifier(ModelSpec spec, std::vector<LayerParams> params) : spec_(std::move(spec)), params_(std::move(params)) {
    const auto shapes = layer_shapes(spec_);
    num_classes_ = shapes.back()[0];
    if (params_.size() != spec_.layers.size()) throw StructuralError("model: parameter table length mismatch");
    for (std::size_t i = 0; i < params_.size(); ++i) {
      const LayerSpec& l = spec_.layers[i];
      const LayerParams& p = params_[i];
      Shape ws, bs;
      if (l.kind == LayerKind::dense) ws = {l.out, l.in}, bs = {l.out};
      if (l.kind == LayerKind::conv) ws = {l.out, l.in, l.k, l.k}, bs = {l.out};
      if (l.has_params() ? (p.weight.shape() != ws || p.bias.shape() != bs) : (!p.weight.empty() || !p.bias.empty()))
        throw StructuralError("model: parameter shape mismatch at layer " + std::to_string(i));
    }
  }

  const ModelSpec& spec() const noexcept { return spec_; }
  const Shape& input_shape() const noexcept { return spec_.input_shape; }
  std::size_t num_classes() const noexcept { return num_classes_; }
  const std::vector<LayerParams>& params() const noexcept { return params_; }
  std::vector<LayerParams>& params() noexcept { return params_; }

  TrainingDescriptor training;
  std::uint64_t seed = 0;

  ParamGradients zero_gradients() const {
    ParamGradients g;
    for (const LayerParams& p : params_) g.push_back({Tensor::zeros_like(p.weight), Tensor::zeros_like(p.bias)});
    return g;
  }

 private:
  static void init_uniform(Tensor& t, double bound, RngStream& rng) {
    for (double& v : t.data()) v = rng.uniform(-bound, bound);
  }

  ModelSpec spec_;
  std::vector<LayerParams> params_;
  std::size_t num_classes_ = 0;
};

namespace detail {

inline void dense_forward(const LayerParams& p, const Tensor& x, Tensor& y) {
  const std::size_t out = p.weight.dim(0), in = p.weight.dim(1);
  const double* w = p.weight.data().data();
  for (std::size_t o = 0; o < out; ++o) {
    double acc = p.bias[o];
    const double* row = w + o * in;
    for (std::size_t i = 0; i < in; ++i) acc += row[i] * x[i];
    y[o] = acc;
  }
}

// Valid output range [lo, hi) along one axis for kernel offset `off` = i - pad.
inline void conv_range(long off, long n, long& lo, long& hi) {
  lo = std::max(0L, -off);
  hi = std::min(n, n - off);
}

inline void conv_forward(const LayerSpec& l, const LayerParams& p, const Tensor& x, Tensor& y) {
  const long H = static_cast<long>(x.dim(1)), W = static_cast<long>(x.dim(2));
  const long k = static_cast<long>(l.k), pad = k / 2;
  for (std::size_t o = 0; o < l.out; ++o) {
    double* yo = y.data().data() + o * H * W;
    for (long i = 0; i < H * W; ++i) yo[i] = p.bias[o];
    for (std::size_t c = 0; c < l.in; ++c) {
      const double* xc = x.data().data() + c * H * W;
      for (long ki = 0; ki < k; ++ki) {
        long h0, h1;
        conv_range(ki - pad, H, h0, h1);
        for (long kj = 0; kj < k; ++kj) {
          long w0, w1;
          conv_range(kj - pad, W, w0, w1);
          const double wv = p.weight[((o * l.in + c) * l.k + ki) * l.k + kj];
          for (long h = h0; h < h1; ++h) {
            const double* xr = xc + (h + ki - pad) * W + (kj - pad);
            double* yr = yo + h * W;
            for (long w = w0; w < w1; ++w) yr[w] += wv * xr[w];
          }
        }
      }
    }
  }
}

inline void conv_backward(const LayerSpec& l, const LayerParams& p, const Tensor& x, const Tensor& dy, Tensor* dx,
                          LayerParams* dp) {
  const long H = static_cast<long>(x.dim(1)), W = static_cast<long>(x.dim(2));
  const long k = static_cast<long>(l.k), pad = k / 2;
  for (std::size_t o = 0; o < l.out; ++o) {
    const double* dyo = dy.data().data() + o * H * W;
    if (dp) {
      double s = 0.0;
      for (long i = 0; i < H * W; ++i) s += dyo[i];
      dp->bias[o] += s;
    }
    for (std::size_t c = 0; c < l.in; ++c) {
      const double* xc = x.data().data() + c * H * W;
      double* dxc = dx ? dx->data().data() + c * H * W : nullptr;
      for (long ki = 0; ki < k; ++ki) {
        long h0, h1;
        conv_range(ki - pad, H, h0, h1);
        for (long kj = 0; kj < k; ++kj) {
          long w0, w1;
          conv_range(kj - pad, W, w0, w1);
          const std::size_t widx = ((o * l.in + c) * l.k + ki) * l.k + kj;
          const double wv = p.weight[widx];
          double gw = 0.0;
          for (long h = h0; h < h1; ++h) {
            const long off = (h + ki - pad) * W + (kj - pad);
            const double* dyr = dyo + h * W;
            if (dxc) {
              double* dxr = dxc + off;
              for (long w = w0; w < w1; ++w) dxr[w] += wv * dyr[w];
            }
            if (dp) {
              const double* xr = xc + off;
              for (long w = w0; w < w1; ++w) gw += dyr[w] * xr[w];
            }
          }
          if (dp) dp->weight[widx] += gw;
        }
      }
    }
  }
}

}  // namespace detail

/// Activations recorded by a single-example forward pass: acts[0] is the
/// input, acts[i+1] the output of layer i, acts.back() the logits.
struct ForwardTrace {
  std::vector<Tensor> acts;

  const Tensor& logits() const { return acts.back(); }
};

inline ForwardTrace forward_trace(const Classifier& model, const Tensor& x) {
  if (x.shape() != model.input_shape())
    throw StructuralError("forward: input shape " + shape_str(x.shape()) + " does not match model input " +
                          shape_str(model.input_shape()));
  ForwardTrace tr;
  tr.acts.reserve(model.spec().layers.size() + 1);
  tr.acts.push_back(x);
  for (std::size_t i = 0; i < model.spec().layers.size(); ++i) {
    const LayerSpec& l = model.spec().layers[i];
    const Tensor& in = tr.acts.back();
    switch (l.kind) {
      case LayerKind::dense: {
        Tensor y({l.out});
        detail::dense_forward(model.params()[i], in, y);
        tr.acts.push_back(std::move(y));
        break;
      }
      case LayerKind::conv: {
        Tensor y({l.out, in.dim(1), in.dim(2)});
        detail::conv_forward(l, model.params()[i], in, y);
        tr.acts.push_back(std::move(y));
        break;
      }
      case LayerKind::relu: {
        Tensor y = in;
        for (double& v : y.data()) v = v > 0.0 ? v : 0.0;
        tr.acts.push_back(std::move(y));
        break;
      }
      case LayerKind::flatten:
        tr.acts.push_back(in.reshaped({in.size()}));
        break;
    }
  }
  return tr;
}

/// Reverse pass. Returns d(objective)/d(input) given d(objective)/d(logits);
/// accumulates parameter gradients into `param_grads` when non-null.
inline Tensor backward(const Classifier& model, const ForwardTrace& tr, Tensor grad,
                       ParamGradients* param_grads = nullptr, bool need_input_grad = true) {
  const auto& layers = model.spec().layers;
  for (std::size_t n = layers.size(); n-- > 0;) {
    const LayerSpec& l = layers[n];
    const Tensor& in = tr.acts[n];
    LayerParams* dp = param_grads ? &(*param_grads)[n] : nullptr;
    const bool want_dx = need_input_grad || n > 0;
    switch (l.kind) {
      case LayerKind::dense: {
        const Tensor& w = model.params()[n].weight;
        Tensor dx({l.in});
        for (std::size_t o = 0; o < l.out; ++o) {
          const double g = grad[o];
          if (g == 0.0) continue;
          const double* row = w.data().data() + o * l.in;
          if (want_dx)
            for (std::size_t i = 0; i < l.in; ++i) dx[i] += row[i] * g;
          if (dp) {
            dp->bias[o] += g;
            double* drow = dp->weight.data().data() + o * l.in;
            for (std::size_t i = 0; i < l.in; ++i) drow[i] += g * in[i];
          }
        }
        grad = std::move(dx);
        break;
      }
      case LayerKind::conv: {
        Tensor dx(in.shape());
        detail::conv_backward(l, model.params()[n], in, grad, want_dx ? &dx : nullptr, dp);
        grad = std::move(dx);
        break;
      }
      case LayerKind::relu:
        for (std::size_t i = 0; i < grad.size(); ++i)
          if (!(in[i] > 0.0)) grad[i] = 0.0;
        break;
      case LayerKind::flatten:
        grad = std::move(grad).reshaped(in.shape());
        break;
    }
  }
  return grad;
}

/// Logits for one example x (shape == input shape) or a batch [B, ...input].
inline Tensor forward(const Classifier& model, const Tensor& x) {
  if (x.shape() == model.input_shape()) return forward_trace(model, x).logits();
  const Shape& in = model.input_shape();
  if (x.rank() != in.size() + 1 || !std::equal(in.begin(), in.end(), x.shape().begin() + 1))
    throw StructuralError("forward: input shape " + shape_str(x.shape()) + " does not match model input " +
                          shape_str(in));
  const std::size_t B = x.dim(0), K = model.num_classes();
  Tensor out({B, K});
  for (std::size_t b = 0; b < B; ++b) {
    const Tensor lg = forward_trace(model, x.slice(b)).logits();
    std::copy(lg.data().begin(), lg.data().end(), out.data().begin() + b * K);
  }
  return out;
}

inline std::size_t predict(const Classifier& model, const Tensor& x) { return argmax(forward(model, x).data()); }

/// -log softmax(logits)[label], max-shifted.
inline double cross_entropy(const Tensor& logits, std::size_t label) {
  if (label >= logits.size()) throw ArgumentError("cross_entropy: label out of range");
  const double m = max(logits);
  double z = 0.0;
  for (double v : logits.data()) z += std::exp(v - m);
  return std::log(z) - (logits[label] - m);
}

/// d cross_entropy / d logits = softmax(logits) - onehot(label).
inline Tensor cross_entropy_grad(const Tensor& logits, std::size_t label) {
  if (label >= logits.size()) throw ArgumentError("cross_entropy: label out of range");
  Tensor g = softmax(logits);
  g[label] -= 1.0;
  return g;
}

struct LossGradient {
  double loss = 0.0;
  Tensor gradient;
};

inline LossGradient loss_and_input_gradient(const Classifier& model, const Tensor& x, std::size_t y) {
  const ForwardTrace tr = forward_trace(model, x);
  LossGradient out;
  out.loss = cross_entropy(tr.logits(), y);
  out.gradient = backward(model, tr, cross_entropy_grad(tr.logits(), y));
  return out;
}

/// Exact gradient of the cross-entropy loss with respect to the input.
/// Accepts a single example or a batch (with one label per example).
inline Tensor input_gradient(const Classifier& model, const Tensor& x, std::size_t y) {
  return loss_and_input_gradient(model, x, y).gradient;
}

inline Tensor input_gradient(const Classifier& model, const Tensor& x, const std::vector<std::size_t>& labels) {
  if (x.shape() == model.input_shape()) {
    if (labels.size() != 1) throw ArgumentError("input_gradient: one label expected");
    return input_gradient(model, x, labels[0]);
  }
  if (x.rank() != model.input_shape().size() + 1 || x.dim(0) != labels.size())
    throw StructuralError("input_gradient: batch shape/label count mismatch");
  Tensor out(x.shape());
  const std::size_t n = shape_size(model.input_shape());
  for (std::size_t b = 0; b < labels.size(); ++b) {
    const Tensor g = input_gradient(model, x.slice(b), labels[b]);
    std::copy(g.data().begin(), g.data().end(), out.data().begin() + b * n);
  }
  return out;
}

/// Cross-entropy loss and its parameter gradients for one example, accumulated into `grads`.
inline double accumulate_param_gradients(const Classifier& model, const Tensor& x, std::size_t y,
                                         ParamGradients& grads) {
  const ForwardTrace tr = forward_trace(model, x);
  const double loss = cross_entropy(tr.logits(), y);
  backward(model, tr, cross_entropy_grad(tr.logits(), y), &grads, false);
  return loss;
}

}  // namespace daa

#endif  // DAATTACK_NET_HPP
