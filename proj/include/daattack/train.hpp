#ifndef DAATTACK_TRAIN_HPP
#define DAATTACK_TRAIN_HPP

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "attacks.hpp"
#include "dataset.hpp"
#include "errors.hpp"
#include "net.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace daa {

struct TrainHyper {
  double lr = 0.05;
  std::size_t epochs = 10;
  std::size_t batch = 32;
  std::uint64_t seed = 0;
  double weight_decay = 0.0;  // L2 penalty on weights (not biases)
};

struct TrainMode {
  bool adversarial = false;
  double epsilon = 0.0;
  std::uint32_t steps = 0;

  static TrainMode normal() { return {}; }
  static TrainMode adversarial_pgd(double epsilon, std::uint32_t steps) { return {true, epsilon, steps}; }
};

/// Inner maximisation used by adversarial training and robustness checks:
/// uniform random start in the ball, `steps` sign steps of 2.5*eps/steps.
inline AttackConfig pgd_config(double epsilon, std::uint32_t steps, std::uint64_t seed) {
  AttackConfig c;
  c.epsilon = epsilon;
  c.iters = steps;
  c.alpha = 2.5 * epsilon / static_cast<double>(steps);
  c.random_start = true;
  c.seed = seed;
  return c;
}

/// Plain minibatch SGD on cross-entropy. In adversarial mode every batch is
/// replaced by PGD examples inside the epsilon ball before the update.
/// Deterministic for a given seed: init, shuffling and PGD draw from
/// separate child streams.
inline Classifier train(Classifier model, const Dataset& data, const TrainHyper& hyper, const TrainMode& mode) {
  data.validate();
  if (data.image_shape() != model.input_shape())
    throw StructuralError("train: dataset image shape " + shape_str(data.image_shape()) +
                          " does not match model input " + shape_str(model.input_shape()));
  if (data.num_classes > model.num_classes()) throw StructuralError("train: dataset has more classes than the model");
  if (hyper.batch == 0 || !(hyper.lr > 0.0)) throw ConfigError("train: batch must be >= 1 and lr > 0");
  if (!(hyper.weight_decay >= 0.0)) throw ConfigError("train: weight decay must be >= 0");
  if (mode.adversarial && (mode.steps == 0 || !(mode.epsilon > 0.0)))
    throw ConfigError("train: adversarial mode needs epsilon > 0 and steps >= 1");

  model.training = {mode.adversarial, mode.adversarial ? mode.epsilon : 0.0, mode.adversarial ? mode.steps : 0u};
  model.seed = hyper.seed;
  const RngStream root(hyper.seed);
  RngStream shuffle_rng = root.child(1);
  const AttackConfig pgd = pgd_config(mode.epsilon, mode.steps, labeled_seed(hyper.seed, "train/pgd"));

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::uint64_t pgd_counter = 0;
  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    for (std::size_t i = order.size(); i-- > 1;) std::swap(order[i], order[shuffle_rng.uniform_int(0, i)]);
    for (std::size_t start = 0, b = 0; start < order.size(); start += hyper.batch, ++b) {
      const std::size_t end = std::min(order.size(), start + hyper.batch);
      ParamGradients grads = model.zero_gradients();
      double loss = 0.0;
      for (std::size_t j = start; j < end; ++j) {
        Tensor x = data.example(order[j]);
        const std::size_t y = data.labels[order[j]];
        if (mode.adversarial) x = run_attack(model, x, y, pgd, pgd_counter++).x_star;
        loss += accumulate_param_gradients(model, x, y, grads);
      }
      if (!std::isfinite(loss))
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) + ", batch " + std::to_string(b));
      const double scale = -hyper.lr / static_cast<double>(end - start);
      for (std::size_t l = 0; l < grads.size(); ++l) {
        if (hyper.weight_decay > 0.0) model.params()[l].weight *= 1.0 - hyper.lr * hyper.weight_decay;
        model.params()[l].weight.axpy(scale, grads[l].weight);
        model.params()[l].bias.axpy(scale, grads[l].bias);
      }
    }
  }
  return model;
}

inline Classifier train(const ModelSpec& spec, const Dataset& data, const TrainHyper& hyper, const TrainMode& mode) {
  RngStream init = RngStream(hyper.seed).child(0);
  return train(Classifier(spec, init), data, hyper, mode);
}

/// Fraction of examples classified correctly.
template <class Model>
double accuracy(const Model& model, const Dataset& data) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < data.size(); ++i) ok += predict(model, data.example(i)) == data.labels[i];
  return static_cast<double>(ok) / static_cast<double>(data.size());
}

/// Accuracy under PGD(epsilon, steps) white-box attack.
template <class Model>
double pgd_accuracy(const Model& model, const Dataset& data, double epsilon, std::uint32_t steps, std::uint64_t seed,
                    std::size_t workers = 1) {
  const AttackConfig pgd = pgd_config(epsilon, steps, seed);
  std::vector<char> ok(data.size());
  parallel_for(data.size(), workers, [&](std::size_t i) {
    const Tensor xs = run_attack(model, data.example(i), data.labels[i], pgd, i).x_star;
    ok[i] = predict(model, xs) == data.labels[i];
  });
  return static_cast<double>(std::count(ok.begin(), ok.end(), 1)) / static_cast<double>(data.size());
}

}  // namespace daa

#endif  // DAATTACK_TRAIN_HPP
