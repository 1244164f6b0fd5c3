#ifndef DAATTACK_ATTACKS_HPP
#define DAATTACK_ATTACKS_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ensemble.hpp"
#include "errors.hpp"
#include "net.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "tensor.hpp"
#include "transforms.hpp"

namespace daa {

/// What each per-sample gradient contributes to an aggregated direction.
/// `sign` is the direction-aggregated attack; `raw` sums plain gradients,
/// which is the smoothed-classifier gradient up to a positive scale.
enum class DirectionMode { sign, raw };

/// Hyper-parameters and pipeline switches of one attack run.
///
/// Per iteration the engine computes
///   dir = grad L(f(T(x_t)))                     (single sample), or
///   dir = sum_{i=0..N} s(grad L(f(T(x_t + e_i))))  (aggregate; N+1 draws)
/// with T the optional DIM transform and s = sign or identity, then
///   dir <- W * dir                              (optional TIM smoothing)
///   g   <- mu*g + dir/|dir|_1, step = sign(g)   (momentum) or step = sign(dir)
///   x_{t+1} = clip(x_t + alpha*step)
struct AttackConfig {
  double epsilon = 16.0 / 255.0;
  std::size_t iters = 12;
  std::optional<double> alpha;  // default epsilon / iters
  double mu = 1.0;
  std::size_t samples = 30;
  NoiseSpec noise = NoiseSpec::gaussian(0.05);
  std::optional<DimSpec> dim;
  std::optional<KernelSpec> tim;
  bool momentum = false;
  bool aggregate = false;
  bool random_start = false;
  bool clean_anchor = false;  // i = 0 aggregation term at the un-noised point
  DirectionMode direction = DirectionMode::sign;
  std::uint64_t seed = 0;

  double step_size() const { return alpha ? *alpha : epsilon / static_cast<double>(iters); }

  void validate() const {
    if (!(epsilon >= 0.0)) throw ConfigError("attack: epsilon must be >= 0");
    if (iters < 1) throw ConfigError("attack: iterations must be >= 1");
    if (!(step_size() > 0.0)) throw ConfigError("attack: step size must be > 0");
    if (!(mu >= 0.0)) throw ConfigError("attack: mu must be >= 0");
    if (aggregate && samples < 1) throw ConfigError("attack: sampling times must be >= 1");
    if (noise.kind == NoiseKind::gaussian && !(noise.sigma >= 0.0)) throw ConfigError("attack: sigma must be >= 0");
    if (noise.kind == NoiseKind::uniform && !(noise.low <= noise.high))
      throw ConfigError("attack: uniform noise needs low <= high");
    if (dim) dim->validate();
  }
};

struct AttackResult {
  Tensor x_star;
  Tensor perturbation;
  std::vector<double> loss_trace;  // white-box loss after each iteration
  AttackConfig config;
  std::uint64_t stream = 0;

  double final_loss() const { return loss_trace.empty() ? 0.0 : loss_trace.back(); }
};

enum class Preset {
  fgsm,
  i_fgsm,
  pgd,
  mi_fgsm,
  dim,
  tim,
  ti_dim,
  da_fgsm,
  da_i_fgsm,
  da_mi_fgsm,
  da_dim,
  da_tim,
  da_ti_dim,
};

inline constexpr std::array<std::pair<Preset, std::string_view>, 13> kPresetNames{{
    {Preset::fgsm, "fgsm"},
    {Preset::i_fgsm, "i-fgsm"},
    {Preset::pgd, "pgd"},
    {Preset::mi_fgsm, "mi-fgsm"},
    {Preset::dim, "dim"},
    {Preset::tim, "tim"},
    {Preset::ti_dim, "ti-dim"},
    {Preset::da_fgsm, "da-fgsm"},
    {Preset::da_i_fgsm, "da-i-fgsm"},
    {Preset::da_mi_fgsm, "da-mi-fgsm"},
    {Preset::da_dim, "da-dim"},
    {Preset::da_tim, "da-tim"},
    {Preset::da_ti_dim, "da-ti-dim"},
}};

inline std::string_view preset_name(Preset p) {
  for (const auto& [k, v] : kPresetNames)
    if (k == p) return v;
  return "?";
}

inline Preset parse_preset(std::string_view name) {
  for (const auto& [k, v] : kPresetNames)
    if (v == name) return k;
  throw ConfigError("unknown attack preset '" + std::string(name) + "'");
}

/// Hyper-parameters shared by every preset; the preset decides which
/// pipeline stages are switched on.
struct AttackParams {
  double epsilon = 16.0 / 255.0;
  std::size_t iters = 12;
  std::optional<double> alpha;
  double mu = 1.0;
  std::size_t samples = 30;
  NoiseSpec noise = NoiseSpec::gaussian(0.05);
  DimSpec dim{};
  std::size_t kernel_radius = 1;
  bool clean_anchor = false;
  std::uint64_t seed = 0;
};

inline AttackConfig make_attack(Preset preset, const AttackParams& p) {
  AttackConfig c;
  c.epsilon = p.epsilon;
  c.iters = p.iters;
  c.alpha = p.alpha;
  c.mu = p.mu;
  c.samples = p.samples;
  c.noise = p.noise;
  c.clean_anchor = p.clean_anchor;
  c.seed = p.seed;
  const auto single_step = [&] {
    c.iters = 1;
    c.alpha = c.epsilon;
  };
  switch (preset) {
    case Preset::fgsm:
      single_step();
      break;
    case Preset::i_fgsm:
      break;
    case Preset::pgd:
      c.random_start = true;
      break;
    case Preset::mi_fgsm:
      c.momentum = true;
      break;
    case Preset::dim:
      c.momentum = true;
      c.dim = p.dim;
      break;
    case Preset::tim:
      c.momentum = true;
      c.tim = gaussian_kernel(p.kernel_radius);
      break;
    case Preset::ti_dim:
      c.momentum = true;
      c.dim = p.dim;
      c.tim = gaussian_kernel(p.kernel_radius);
      break;
    case Preset::da_fgsm:
      single_step();
      c.aggregate = true;
      break;
    case Preset::da_i_fgsm:
      c.aggregate = true;
      break;
    case Preset::da_mi_fgsm:
      c.aggregate = c.momentum = true;
      break;
    case Preset::da_dim:
      c.aggregate = c.momentum = true;
      c.dim = p.dim;
      break;
    case Preset::da_tim:
      c.aggregate = c.momentum = true;
      c.tim = gaussian_kernel(p.kernel_radius);
      break;
    case Preset::da_ti_dim:
      c.aggregate = c.momentum = true;
      c.dim = p.dim;
      c.tim = gaussian_kernel(p.kernel_radius);
      break;
  }
  c.validate();
  return c;
}

/// Gradient of the loss w.r.t. x through an optional DIM draw.
template <class Model>
LossGradient transformed_gradient(const Model& model, const Tensor& x, std::size_t y,
                                  const std::optional<DimSpec>& dim, RngStream& rng) {
  if (!dim) return loss_and_input_gradient(model, x, y);
  const DimDraw d = draw_dim(*dim, x.dim(1), x.dim(2), rng);
  LossGradient lg = loss_and_input_gradient(model, apply_dim(x, d), y);
  lg.gradient = dim_adjoint(lg.gradient, d);
  return lg;
}

/// g_a = sum_{i=0..N} s(grad L(f(T(x_t + e_i)), y)). Draws N+1 noise samples
/// (the i = 0 sample is skipped when `clean_anchor`); each sample draws its
/// own DIM realisation after its noise.
template <class Model>
Tensor aggregate_direction(const Model& model, const Tensor& x_t, std::size_t y, std::size_t samples,
                           const NoiseSpec& noise, const std::optional<DimSpec>& dim, RngStream& rng,
                           DirectionMode mode = DirectionMode::sign, bool clean_anchor = false) {
  if (samples < 1) throw ConfigError("aggregate_direction: N must be >= 1");
  Tensor g(x_t.shape());
  for (std::size_t i = 0; i <= samples; ++i) {
    Tensor xi = x_t;
    if (!(i == 0 && clean_anchor)) xi += sample_noise(x_t.shape(), noise, rng);
    Tensor grad = transformed_gradient(model, xi, y, dim, rng).gradient;
    if (mode == DirectionMode::sign)
      g += sign(std::move(grad));
    else
      g += grad;
  }
  return g;
}

/// Monte-Carlo gradient of the Gaussian-smoothed classifier's loss:
/// (1/N) sum_{i=1..N} grad L(f(x + e_i), y), e_i ~ N(0, sigma^2 I).
template <class Model>
Tensor smoothed_gradient_mc(const Model& model, const Tensor& x, std::size_t y, std::size_t samples, double sigma,
                            RngStream& rng) {
  if (samples < 1) throw ConfigError("smoothed_gradient_mc: N must be >= 1");
  Tensor g(x.shape());
  for (std::size_t i = 0; i < samples; ++i)
    g += loss_and_input_gradient(model, x + sample_noise(x.shape(), NoiseSpec::gaussian(sigma), rng), y).gradient;
  return g *= 1.0 / static_cast<double>(samples);
}

/// g <- mu*g + dir/|dir|_1. A zero direction contributes nothing.
inline void momentum_update(Tensor& g, const Tensor& dir, double mu) {
  g *= mu;
  const double n = l1_norm(dir);
  if (n > 0.0) g.axpy(1.0 / n, dir);
}

/// The unified attack loop. `rng` supplies every random draw of this example
/// (random start, noise samples, DIM draws) in a fixed order.
template <class Model>
AttackResult run_attack(const Model& model, const Tensor& x, std::size_t y, const AttackConfig& cfg, RngStream rng) {
  cfg.validate();
  if (x.shape() != model.input_shape())
    throw StructuralError("attack: input shape " + shape_str(x.shape()) + " does not match model input " +
                          shape_str(model.input_shape()));
  if (y >= model.num_classes()) throw ArgumentError("attack: label out of range");
  if ((cfg.dim || cfg.tim) && x.rank() != 3) throw StructuralError("attack: DIM/TIM need [C,H,W] inputs");

  const double alpha = cfg.step_size();
  AttackResult res;
  res.config = cfg;
  Tensor xs = x;
  if (cfg.random_start) {
    xs += sample_noise(x.shape(), NoiseSpec::uniform(-cfg.epsilon, cfg.epsilon), rng);
    xs = clip_ball_and_range(std::move(xs), x, cfg.epsilon);
  }
  Tensor g(x.shape());
  res.loss_trace.reserve(cfg.iters);
  for (std::size_t t = 0; t < cfg.iters; ++t) {
    Tensor dir = cfg.aggregate ? aggregate_direction(model, xs, y, cfg.samples, cfg.noise, cfg.dim, rng,
                                                     cfg.direction, cfg.clean_anchor)
                               : transformed_gradient(model, xs, y, cfg.dim, rng).gradient;
    if (cfg.tim) dir = smooth_gradient(dir, *cfg.tim);
    Tensor step;
    if (cfg.momentum) {
      momentum_update(g, dir, cfg.mu);
      step = sign(g);
    } else {
      step = sign(std::move(dir));
    }
    xs.axpy(alpha, step);
    xs = clip_ball_and_range(std::move(xs), x, cfg.epsilon);
    res.loss_trace.push_back(cross_entropy(forward(model, xs), y));
  }
  res.perturbation = xs - x;
  res.x_star = std::move(xs);
  return res;
}

/// Stream of example `index` for a config: RngStream(seed).child(index).
inline RngStream example_stream(const AttackConfig& cfg, std::uint64_t index) {
  return RngStream(cfg.seed).child(index);
}

template <class Model>
AttackResult run_attack(const Model& model, const Tensor& x, std::size_t y, const AttackConfig& cfg,
                        std::uint64_t index = 0) {
  AttackResult r = run_attack(model, x, y, cfg, example_stream(cfg, index));
  r.stream = index;
  return r;
}

/// Attacks every example; example i uses the stream of `positions[i]` (its
/// dataset position), so results do not depend on `workers`.
template <class Model>
std::vector<AttackResult> run_attack_batch(const Model& model, const std::vector<Tensor>& xs,
                                           const std::vector<std::size_t>& labels,
                                           const std::vector<std::size_t>& positions, const AttackConfig& cfg,
                                           std::size_t workers = 1) {
  if (xs.size() != labels.size() || xs.size() != positions.size())
    throw ArgumentError("attack batch: inputs, labels and positions must align");
  std::vector<AttackResult> out(xs.size());
  parallel_for(xs.size(), workers, [&](std::size_t i) { out[i] = run_attack(model, xs[i], labels[i], cfg, positions[i]); });
  return out;
}

}  // namespace daa

#endif  // DAATTACK_ATTACKS_HPP
