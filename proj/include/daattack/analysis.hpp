#ifndef DAATTACK_ANALYSIS_HPP
#define DAATTACK_ANALYSIS_HPP

#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "attacks.hpp"
#include "dataset.hpp"
#include "ensemble.hpp"
#include "errors.hpp"
#include "net.hpp"
#include "parallel.hpp"
#include "tensor.hpp"

namespace daa {

struct AdversarialExample {
  Tensor x_star;
  Tensor x;
  std::size_t label = 0;
  std::size_t position = 0;  // index in the originating dataset

  Tensor perturbation() const { return x_star - x; }
};

/// D*: adversarial examples crafted on one source.
struct AdversarialSet {
  std::string source;
  std::string attack;
  std::vector<AdversarialExample> items;

  std::size_t size() const noexcept { return items.size(); }
  bool empty() const noexcept { return items.empty(); }
};

/// Clean examples to attack, remembered with their dataset positions.
struct EvalSet {
  std::vector<Tensor> xs;
  std::vector<std::size_t> labels;
  std::vector<std::size_t> positions;

  std::size_t size() const noexcept { return xs.size(); }
};

/// Model used to craft examples: a single classifier or a logit ensemble.
using SourceModel = std::variant<const Classifier*, const Ensemble*>;

inline AdversarialSet generate_adversarial_set(const SourceModel& source, const EvalSet& eval, const AttackConfig& cfg,
                                               std::string source_id, std::string attack_name,
                                               std::size_t workers = 1) {
  std::vector<AttackResult> results = std::visit(
      [&](const auto* m) { return run_attack_batch(*m, eval.xs, eval.labels, eval.positions, cfg, workers); }, source);
  AdversarialSet set{std::move(source_id), std::move(attack_name), {}};
  set.items.reserve(results.size());
  for (std::size_t i = 0; i < results.size(); ++i)
    set.items.push_back({std::move(results[i].x_star), eval.xs[i], eval.labels[i], eval.positions[i]});
  return set;
}

/// 100 * |{i : argmax f(x*_i) != y_i}| / M.
template <class Model>
double success_rate(const Model& target, const AdversarialSet& set) {
  if (set.empty()) throw ArgumentError("success_rate: empty adversarial set");
  std::size_t fooled = 0;
  for (const auto& e : set.items) fooled += predict(target, e.x_star) != e.label;
  return 100.0 * static_cast<double>(fooled) / static_cast<double>(set.size());
}

/// S_m: positions of examples in `set` the model still classifies correctly.
template <class Model>
std::set<std::size_t> surviving_set(const Model& model, const AdversarialSet& set) {
  std::set<std::size_t> s;
  for (const auto& e : set.items)
    if (predict(model, e.x_star) == e.label) s.insert(e.position);
  return s;
}

/// |(U_m S_m) n S_robust| / |U_m S_m|; nullopt when the union is empty.
inline std::optional<double> ratio_metric(const std::vector<std::set<std::size_t>>& normal_sets,
                                          const std::set<std::size_t>& robust_set) {
  std::set<std::size_t> uni;
  for (const auto& s : normal_sets) uni.insert(s.begin(), s.end());
  if (uni.empty()) return std::nullopt;
  std::size_t both = 0;
  for (std::size_t p : uni) both += robust_set.count(p);
  return static_cast<double>(both) / static_cast<double>(uni.size());
}

/// Pairwise mean cosine similarity of perturbations between sources.
struct CosineMatrix {
  std::vector<std::string> sources;
  std::vector<std::vector<double>> mean;           // [a][b]
  std::vector<std::vector<std::size_t>> skipped;   // zero-perturbation pairs per [a][b]

  /// Mean of the strictly-upper triangle.
  double mean_off_diagonal() const {
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t a = 0; a < mean.size(); ++a)
      for (std::size_t b = a + 1; b < mean.size(); ++b) s += mean[a][b], ++n;
    return n ? s / static_cast<double>(n) : 1.0;
  }
};

/// Sets must be aligned example-by-example. `include`, when given, restricts
/// the mean to the flagged examples. Pairs with a zero perturbation are
/// skipped and counted; the diagonal is 1 by definition.
inline CosineMatrix perturbation_cosine(const std::vector<const AdversarialSet*>& sets,
                                        const std::vector<char>* include = nullptr) {
  CosineMatrix cm;
  const std::size_t S = sets.size();
  if (S == 0) return cm;
  const std::size_t M = sets.front()->size();
  for (const auto* s : sets) {
    if (s->size() != M) throw StructuralError("perturbation_cosine: sets are not aligned");
    for (std::size_t i = 0; i < M; ++i)
      if (s->items[i].position != sets.front()->items[i].position)
        throw StructuralError("perturbation_cosine: sets are not aligned");
    cm.sources.push_back(s->source);
  }
  if (include && include->size() != M) throw StructuralError("perturbation_cosine: mask size mismatch");
  cm.mean.assign(S, std::vector<double>(S, 1.0));
  cm.skipped.assign(S, std::vector<std::size_t>(S, 0));
  std::vector<std::vector<Tensor>> deltas(S);
  for (std::size_t a = 0; a < S; ++a)
    for (const auto& e : sets[a]->items) deltas[a].push_back(e.perturbation());
  for (std::size_t a = 0; a < S; ++a)
    for (std::size_t b = a + 1; b < S; ++b) {
      double total = 0.0;
      std::size_t n = 0, skipped = 0;
      for (std::size_t i = 0; i < M; ++i) {
        if (include && !(*include)[i]) continue;
        if (const auto c = cosine(deltas[a][i], deltas[b][i])) {
          total += *c;
          ++n;
        } else {
          ++skipped;
        }
      }
      cm.mean[a][b] = cm.mean[b][a] = n ? total / static_cast<double>(n) : 0.0;
      cm.skipped[a][b] = cm.skipped[b][a] = skipped;
    }
  return cm;
}

/// One (attack, source, target) evaluation.
struct TransferRow {
  std::string attack;
  std::string source;
  std::string target;
  double success_rate = 0.0;
  std::size_t examples = 0;
  bool white_box = false;
  std::uint64_t seed = 0;

  bool operator==(const TransferRow&) const = default;
};

struct NamedModel {
  std::string id;
  const Classifier* model = nullptr;
  bool robust = false;
};

/// Rows for every target; `white_box` lists the ids whose gradients crafted the set.
inline std::vector<TransferRow> evaluate_transfer(const AdversarialSet& set, const std::vector<NamedModel>& targets,
                                                  const std::vector<std::string>& white_box, std::uint64_t seed,
                                                  std::size_t workers = 1) {
  std::vector<TransferRow> rows(targets.size());
  parallel_for(targets.size(), workers, [&](std::size_t t) {
    rows[t] = {set.attack,
               set.source,
               targets[t].id,
               success_rate(*targets[t].model, set),
               set.size(),
               std::find(white_box.begin(), white_box.end(), targets[t].id) != white_box.end(),
               seed};
  });
  return rows;
}

enum class SweepParam { samples, sigma, epsilon, iters, alpha };

inline std::string_view sweep_param_name(SweepParam p) {
  switch (p) {
    case SweepParam::samples: return "N";
    case SweepParam::sigma: return "sigma";
    case SweepParam::epsilon: return "epsilon";
    case SweepParam::iters: return "T";
    case SweepParam::alpha: return "alpha";
  }
  return "?";
}

inline SweepParam parse_sweep_param(std::string_view s) {
  if (s == "N" || s == "samples") return SweepParam::samples;
  if (s == "sigma") return SweepParam::sigma;
  if (s == "epsilon" || s == "eps") return SweepParam::epsilon;
  if (s == "T" || s == "iters") return SweepParam::iters;
  if (s == "alpha") return SweepParam::alpha;
  throw ConfigError("unknown sweep parameter '" + std::string(s) + "'");
}

/// Config with one hyper-parameter replaced. Epsilon keeps alpha = eps/T
/// unless alpha was set explicitly; an explicit alpha is never re-derived.
inline AttackConfig with_param(AttackConfig c, SweepParam p, double value) {
  switch (p) {
    case SweepParam::samples:
      if (!(value >= 1.0)) throw ConfigError("sweep: N must be >= 1");
      c.samples = static_cast<std::size_t>(value);
      break;
    case SweepParam::sigma:
      c.noise = NoiseSpec::gaussian(value);
      break;
    case SweepParam::epsilon:
      c.epsilon = value;
      break;
    case SweepParam::iters:
      if (!(value >= 1.0)) throw ConfigError("sweep: T must be >= 1");
      c.iters = static_cast<std::size_t>(value);
      break;
    case SweepParam::alpha:
      c.alpha = value;
      break;
  }
  c.validate();
  return c;
}

struct SweepSource {
  std::string id;
  SourceModel model;
  std::vector<std::string> white_box;
};

struct SweepPoint {
  double value = 0.0;
  std::vector<TransferRow> rows;
};

struct SweepCurve {
  SweepParam param = SweepParam::samples;
  std::string attack;
  std::vector<SweepPoint> points;

  /// Success of one (source, target) pair at each grid point.
  std::vector<double> series(const std::string& source, const std::string& target) const {
    std::vector<double> out;
    for (const auto& p : points)
      for (const auto& r : p.rows)
        if (r.source == source && r.target == target) out.push_back(r.success_rate);
    return out;
  }
};

/// For each grid value: regenerate D* on every source, evaluate on every target.
inline SweepCurve sweep(SweepParam param, const std::vector<double>& grid, const AttackConfig& base,
                        const std::string& attack_name, const std::vector<SweepSource>& sources,
                        const std::vector<NamedModel>& targets, const EvalSet& eval, std::size_t workers = 1) {
  if (grid.empty()) throw ConfigError("sweep: empty grid");
  SweepCurve curve{param, attack_name, {}};
  for (double v : grid) {
    const AttackConfig cfg = with_param(base, param, v);
    SweepPoint pt{v, {}};
    for (const auto& s : sources) {
      const AdversarialSet set = generate_adversarial_set(s.model, eval, cfg, s.id, attack_name, workers);
      auto rows = evaluate_transfer(set, targets, s.white_box, cfg.seed, workers);
      pt.rows.insert(pt.rows.end(), rows.begin(), rows.end());
    }
    curve.points.push_back(std::move(pt));
  }
  return curve;
}

}  // namespace daa

#endif  // DAATTACK_ANALYSIS_HPP
