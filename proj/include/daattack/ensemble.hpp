#ifndef DAATTACK_ENSEMBLE_HPP
#define DAATTACK_ENSEMBLE_HPP

#include <cmath>
#include <functional>
#include <vector>

#include "errors.hpp"
#include "net.hpp"

namespace daa {

/// Logit-fusing ensemble: logits = sum_m w_m * logits_m. Members are borrowed
/// and must outlive the ensemble.
class Ensemble {
 public:
  explicit Ensemble(std::vector<std::reference_wrapper<const Classifier>> members, std::vector<double> weights = {})
      : members_(std::move(members)), weights_(std::move(weights)) {
    if (members_.empty()) throw StructuralError("ensemble: no members");
    if (weights_.empty()) weights_.assign(members_.size(), 1.0 / static_cast<double>(members_.size()));
    if (weights_.size() != members_.size()) throw StructuralError("ensemble: one weight per member required");
    double total = 0.0;
    for (double w : weights_) total += w;
    if (std::abs(total - 1.0) > 1e-9) throw ConfigError("ensemble: weights must sum to 1");
    const Classifier& first = members_.front();
    for (const Classifier& m : members_) {
      if (m.num_classes() != first.num_classes()) throw StructuralError("ensemble: class-count mismatch");
      if (m.input_shape() != first.input_shape()) throw StructuralError("ensemble: input-shape mismatch");
    }
  }

  const Shape& input_shape() const noexcept { return members_.front().get().input_shape(); }
  std::size_t num_classes() const noexcept { return members_.front().get().num_classes(); }
  std::size_t size() const noexcept { return members_.size(); }
  const Classifier& member(std::size_t i) const { return members_.at(i); }
  double weight(std::size_t i) const { return weights_.at(i); }

 private:
  std::vector<std::reference_wrapper<const Classifier>> members_;
  std::vector<double> weights_;
};

/// Fused logits of a single example.
inline Tensor forward(const Ensemble& e, const Tensor& x) {
  Tensor fused({e.num_classes()});
  for (std::size_t m = 0; m < e.size(); ++m) fused.axpy(e.weight(m), forward_trace(e.member(m), x).logits());
  return fused;
}

inline Tensor ensemble_logits(const std::vector<std::reference_wrapper<const Classifier>>& models,
                              const std::vector<double>& weights, const Tensor& x) {
  return forward(Ensemble(models, weights), x);
}

inline std::size_t predict(const Ensemble& e, const Tensor& x) { return argmax(forward(e, x).data()); }

/// Cross-entropy of the fused logits and its input gradient: the fused
/// softmax residual is pushed back through every member, scaled by its weight.
inline LossGradient loss_and_input_gradient(const Ensemble& e, const Tensor& x, std::size_t y) {
  std::vector<ForwardTrace> traces;
  traces.reserve(e.size());
  Tensor fused({e.num_classes()});
  for (std::size_t m = 0; m < e.size(); ++m) {
    traces.push_back(forward_trace(e.member(m), x));
    fused.axpy(e.weight(m), traces.back().logits());
  }
  LossGradient out;
  out.loss = cross_entropy(fused, y);
  const Tensor residual = cross_entropy_grad(fused, y);
  out.gradient = Tensor(x.shape());
  for (std::size_t m = 0; m < e.size(); ++m)
    out.gradient += backward(e.member(m), traces[m], residual * e.weight(m));
  return out;
}

inline Tensor input_gradient(const Ensemble& e, const Tensor& x, std::size_t y) {
  return loss_and_input_gradient(e, x, y).gradient;
}

}  // namespace daa

#endif  // DAATTACK_ENSEMBLE_HPP
