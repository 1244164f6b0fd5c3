// Trains two small classifiers on synthetic rings, crafts MI-FGSM and
// DA-MI-FGSM examples on one, and measures how well they transfer.
#include <cstdio>

#include "daattack/analysis.hpp"
#include "daattack/dataset.hpp"
#include "daattack/train.hpp"
#include "daattack/zoo.hpp"

int main() {
  using namespace daa;
  const Dataset data = make_rings({1000, 12, 3, 0.0, 0.3, 4});
  const TrainTestSplit sp = split(data, 0.2);
  const Shape in = data.image_shape();

  const auto fit = [&](const char* arch, std::uint64_t seed) {
    return train(parse_architecture(arch, in, 3), sp.train, {0.02, 12, 32, seed}, TrainMode::normal());
  };
  const Classifier source = fit("mlp:64,64,64", 1);
  const Classifier target = fit("mlp:48,48,48,48", 2);
  std::printf("clean accuracy: source %.3f, target %.3f\n", accuracy(source, sp.test), accuracy(target, sp.test));

  EvalSet ev;
  for (std::size_t i = 0; i < sp.test.size() && ev.size() < 60; ++i) {
    const Tensor x = sp.test.example(i);
    if (predict(source, x) != sp.test.labels[i] || predict(target, x) != sp.test.labels[i]) continue;
    ev.xs.push_back(x);
    ev.labels.push_back(sp.test.labels[i]);
    ev.positions.push_back(i);
  }

  AttackParams p;
  p.seed = 7;
  for (Preset preset : {Preset::mi_fgsm, Preset::da_mi_fgsm}) {
    const AttackConfig cfg = make_attack(preset, p);
    const AdversarialSet set = generate_adversarial_set(&source, ev, cfg, "source", std::string(preset_name(preset)));
    std::printf("%-11s white-box %5.1f%%  transfer %5.1f%%\n", std::string(preset_name(preset)).c_str(),
                success_rate(source, set), success_rate(target, set));
  }
}
