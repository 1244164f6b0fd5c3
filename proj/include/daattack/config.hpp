#ifndef DAATTACK_CONFIG_HPP
#define DAATTACK_CONFIG_HPP

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "analysis.hpp"
#include "attacks.hpp"
#include "errors.hpp"
#include "rng.hpp"
#include "train.hpp"
#include "zoo.hpp"

namespace daa {

struct ModelEntry {
  std::string id;
  std::string arch;
  bool robust = false;
};

/// Everything one experiment needs. Loaded from a flat `key = value` file:
///
///   seed = 7
///   dataset.path = rings.dakd
///   model.n0 = mlp:64,64
///   model.r0 = mlp:64,64 robust
///   attack.presets = i-fgsm,mi-fgsm,da-mi-fgsm
///   attack.sources = n0,ensemble
///
/// Epsilon-like values (attack.epsilon, attack.alpha, train.adv_epsilon and
/// epsilon/alpha sweep grids) are read on the scale given by `units`
/// (255 or 1) and stored in [0,1] pixel units. Noise parameters are always
/// in pixel units.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::string dataset_path;
  double test_fraction = 0.2;
  std::string out_dir = "runs";
  std::size_t workers = 1;
  double units = 255.0;

  std::vector<ModelEntry> models;

  TrainHyper train{0.02, 20, 32, 0, 0.0};
  double adv_epsilon = 4.0 / 255.0;
  std::uint32_t adv_steps = 5;
  std::uint32_t eval_steps = 10;
  std::size_t eval_examples = 200;

  std::vector<std::string> presets{"i-fgsm", "mi-fgsm", "da-mi-fgsm"};
  std::vector<std::string> sources;  // model ids or "ensemble"; default all normal models + ensemble
  std::size_t examples = 100;
  AttackParams attack;
  std::optional<std::uint64_t> attack_seed;  // default: sub-seed "attack" of the master seed
  bool cosine_successful_only = false;

  std::optional<SweepParam> sweep_param;
  std::vector<double> sweep_grid;  // pixel units for epsilon/alpha
  std::string sweep_preset = "da-mi-fgsm";
  std::vector<std::string> sweep_sources;

  std::vector<std::string> normal_ids() const {
    std::vector<std::string> out;
    for (const auto& m : models)
      if (!m.robust) out.push_back(m.id);
    return out;
  }

  const ModelEntry* find_model(std::string_view id) const {
    for (const auto& m : models)
      if (m.id == id) return &m;
    return nullptr;
  }

  /// Sub-seed for a named stage.
  std::uint64_t stage_seed(std::string_view label) const { return labeled_seed(seed, label); }

  AttackConfig attack_config(std::string_view preset) const {
    AttackParams p = attack;
    p.seed = attack_seed ? *attack_seed : stage_seed("attack");
    return make_attack(parse_preset(preset), p);
  }

  /// Normalized echo of the settings that determine the trained zoo.
  /// Paths, the output directory and the worker count are left out so a
  /// run can move or use a different pool without changing its identity.
  nlohmann::ordered_json zoo_echo() const {
    nlohmann::ordered_json j;
    j["seed"] = seed;
    j["dataset.test_fraction"] = test_fraction;
    auto models_j = nlohmann::ordered_json::array();
    for (const auto& m : models) models_j.push_back({{"id", m.id}, {"arch", m.arch}, {"robust", m.robust}});
    j["models"] = models_j;
    j["train.lr"] = train.lr;
    j["train.epochs"] = train.epochs;
    j["train.batch"] = train.batch;
    j["train.weight_decay"] = train.weight_decay;
    j["train.adv_epsilon"] = adv_epsilon;
    j["train.adv_steps"] = adv_steps;
    j["train.eval_steps"] = eval_steps;
    j["train.eval_examples"] = eval_examples;
    return j;
  }

  /// Zoo settings plus everything that shapes attacks, sweeps and analysis.
  nlohmann::ordered_json echo() const {
    nlohmann::ordered_json j = zoo_echo();
    j["attack.presets"] = presets;
    j["attack.sources"] = sources;
    j["attack.examples"] = examples;
    j["attack.epsilon"] = attack.epsilon;
    j["attack.iters"] = attack.iters;
    j["attack.alpha"] = attack.alpha ? nlohmann::ordered_json(*attack.alpha) : nlohmann::ordered_json(nullptr);
    j["attack.mu"] = attack.mu;
    j["attack.samples"] = attack.samples;
    j["attack.noise"] = attack.noise.kind == NoiseKind::gaussian ? "gaussian" : "uniform";
    j["attack.sigma"] = attack.noise.sigma;
    j["attack.uniform_low"] = attack.noise.low;
    j["attack.uniform_high"] = attack.noise.high;
    j["attack.dim_prob"] = attack.dim.p;
    j["attack.dim_min_scale"] = attack.dim.min_scale;
    j["attack.kernel_radius"] = attack.kernel_radius;
    j["attack.clean_anchor"] = attack.clean_anchor;
    j["attack.seed"] = attack_seed ? nlohmann::ordered_json(*attack_seed) : nlohmann::ordered_json(nullptr);
    j["analysis.cosine_examples"] = cosine_successful_only ? "successful" : "all";
    if (sweep_param) {
      j["sweep.param"] = sweep_param_name(*sweep_param);
      j["sweep.grid"] = sweep_grid;
      j["sweep.preset"] = sweep_preset;
      j["sweep.sources"] = sweep_sources;
    }
    return j;
  }

  /// 16 hex digits over echo(); embedded in every artifact.
  std::string hash() const { return hex64(fnv1a(echo().dump())); }

  /// Names the run directory. Only zoo settings count, so attack-side
  /// changes (including CLI overrides) reuse the trained models.
  std::string zoo_hash() const { return hex64(fnv1a(zoo_echo().dump())); }

  std::string run_dir() const { return out_dir + "/" + zoo_hash(); }

  /// Cross-field checks; rerun after applying command-line overrides.
  void validate() const;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  for (auto part : split_view(s, ',')) {
    std::string t = trim(part);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

inline double parse_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out))
    throw ConfigError("config: '" + std::string(key) + "' expects a number, got '" + std::string(v) + "'");
  return out;
}

inline std::uint64_t parse_uint(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ConfigError("config: '" + std::string(key) + "' expects a non-negative integer, got '" + std::string(v) + "'");
  return out;
}

inline bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config: '" + std::string(key) + "' expects true/false, got '" + std::string(v) + "'");
}

inline bool valid_id(std::string_view id) {
  if (id.empty() || id == "ensemble") return false;
  for (char c : id)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
  return true;
}

}  // namespace detail

inline void ExperimentConfig::validate() const {
  if (models.empty()) throw ConfigError("config: define at least one model.<id>");
  std::set<std::string> ids;
  for (const auto& m : models) {
    parse_architecture(m.arch, {1, 32, 32}, 2);  // syntax only; shapes are checked against the dataset later
    if (!ids.insert(m.id).second) throw ConfigError("config: duplicate model id '" + m.id + "'");
  }
  const bool has_normal = !normal_ids().empty();
  for (const auto* list : {&sources, &sweep_sources})
    for (const auto& s : *list)
      if (s == "ensemble" ? !has_normal : !ids.count(s))
        throw ConfigError("config: source '" + s + "' is not a model id" + (s == "ensemble" ? " (no normal models)" : ""));
  for (const auto& p : presets) parse_preset(p);
  if (sweep_param) {
    parse_preset(sweep_preset);
    if (sweep_grid.empty()) throw ConfigError("config: 'sweep.grid' is empty");
    for (double v : sweep_grid) with_param(attack_config(sweep_preset), *sweep_param, v);
  }
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("config: test fraction must be in (0,1)");
  if (examples == 0) throw ConfigError("config: 'attack.examples' must be >= 1");
  if (workers == 0) throw ConfigError("config: 'workers' must be >= 1");
  if (!(adv_epsilon > 0.0) || adv_steps == 0 || eval_steps == 0)
    throw ConfigError("config: train.adv_epsilon must be > 0 and step counts >= 1");
  attack_config(presets.empty() ? "i-fgsm" : presets.front());  // validates attack parameters
}

/// Parse config text. Unknown keys, duplicate keys and dangling model
/// references are errors; `seed` and `dataset.path` are mandatory.
inline ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig c;
  std::map<std::string, std::string> kv;
  std::vector<std::string> model_order;
  std::istringstream in{std::string(text)};
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(n) + ": expected key = value");
    std::string key = detail::trim(std::string_view(t).substr(0, eq));
    std::string val = detail::trim(std::string_view(t).substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(n) + ": empty key");
    if (!kv.emplace(key, val).second) throw ConfigError("config line " + std::to_string(n) + ": duplicate key '" + key + "'");
    if (key.rfind("model.", 0) == 0) model_order.push_back(key);
  }

  const auto take = [&](const std::string& key) -> std::optional<std::string> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    std::string v = std::move(it->second);
    kv.erase(it);
    return v;
  };
  const auto num = [&](const std::string& key, double& dst) {
    if (auto v = take(key)) dst = detail::parse_double(key, *v);
  };
  const auto count = [&](const std::string& key, auto& dst) {
    if (auto v = take(key)) dst = static_cast<std::remove_reference_t<decltype(dst)>>(detail::parse_uint(key, *v));
  };

  const auto seed = take("seed");
  if (!seed) throw ConfigError("config: 'seed' is mandatory");
  c.seed = detail::parse_uint("seed", *seed);
  const auto path = take("dataset.path");
  if (!path || path->empty()) throw ConfigError("config: 'dataset.path' is mandatory");
  c.dataset_path = *path;
  num("dataset.test_fraction", c.test_fraction);
  if (auto v = take("out")) c.out_dir = *v;
  count("workers", c.workers);
  num("units", c.units);
  if (c.units != 255.0 && c.units != 1.0) throw ConfigError("config: 'units' must be 255 or 1");
  if (c.workers == 0) throw ConfigError("config: 'workers' must be >= 1");

  for (const auto& key : model_order) {
    const std::string id = key.substr(6);
    if (!detail::valid_id(id)) throw ConfigError("config: bad model id '" + id + "'");
    std::istringstream words(*take(key));
    ModelEntry m{id, {}, false};
    std::string mode;
    words >> m.arch >> mode;
    std::string extra;
    if (m.arch.empty() || (words >> extra)) throw ConfigError("config: '" + key + "' expects '<arch> [normal|robust]'");
    if (mode == "robust") m.robust = true;
    else if (!mode.empty() && mode != "normal") throw ConfigError("config: '" + key + "' mode must be normal or robust");
    c.models.push_back(std::move(m));
  }
  if (c.models.empty()) throw ConfigError("config: define at least one model.<id>");

  num("train.lr", c.train.lr);
  count("train.epochs", c.train.epochs);
  count("train.batch", c.train.batch);
  num("train.weight_decay", c.train.weight_decay);
  double adv = c.adv_epsilon * c.units;
  num("train.adv_epsilon", adv);
  c.adv_epsilon = adv / c.units;
  count("train.adv_steps", c.adv_steps);
  count("train.eval_steps", c.eval_steps);
  count("train.eval_examples", c.eval_examples);

  if (auto v = take("attack.presets")) c.presets = detail::split_list(*v);
  if (auto v = take("attack.sources")) c.sources = detail::split_list(*v);
  count("attack.examples", c.examples);
  double eps = c.attack.epsilon * c.units;
  num("attack.epsilon", eps);
  c.attack.epsilon = eps / c.units;
  count("attack.iters", c.attack.iters);
  if (auto v = take("attack.alpha")) c.attack.alpha = detail::parse_double("attack.alpha", *v) / c.units;
  num("attack.mu", c.attack.mu);
  count("attack.samples", c.attack.samples);
  double sigma = c.attack.noise.sigma, lo = -0.08, hi = 0.08;
  num("attack.sigma", sigma);
  num("attack.uniform_low", lo);
  num("attack.uniform_high", hi);
  const std::string noise = take("attack.noise").value_or("gaussian");
  if (noise == "gaussian") c.attack.noise = NoiseSpec::gaussian(sigma);
  else if (noise == "uniform") c.attack.noise = NoiseSpec::uniform(lo, hi);
  else throw ConfigError("config: 'attack.noise' must be gaussian or uniform");
  c.attack.noise.sigma = sigma;
  c.attack.noise.low = lo;
  c.attack.noise.high = hi;
  num("attack.dim_prob", c.attack.dim.p);
  num("attack.dim_min_scale", c.attack.dim.min_scale);
  count("attack.kernel_radius", c.attack.kernel_radius);
  if (auto v = take("attack.seed")) c.attack_seed = detail::parse_uint("attack.seed", *v);
  if (auto v = take("attack.clean_anchor")) c.attack.clean_anchor = detail::parse_bool("attack.clean_anchor", *v);
  if (auto v = take("analysis.cosine_examples")) {
    if (*v == "successful") c.cosine_successful_only = true;
    else if (*v != "all") throw ConfigError("config: 'analysis.cosine_examples' must be all or successful");
  }

  if (auto v = take("sweep.param")) c.sweep_param = parse_sweep_param(*v);
  if (auto v = take("sweep.grid")) {
    for (const auto& s : detail::split_list(*v)) c.sweep_grid.push_back(detail::parse_double("sweep.grid", s));
    if (c.sweep_param && (*c.sweep_param == SweepParam::epsilon || *c.sweep_param == SweepParam::alpha))
      for (double& g : c.sweep_grid) g /= c.units;
  }
  if (auto v = take("sweep.preset")) c.sweep_preset = *v;
  if (auto v = take("sweep.sources")) c.sweep_sources = detail::split_list(*v);

  if (!kv.empty()) throw ConfigError("config: unknown key '" + kv.begin()->first + "'");

  if (c.sources.empty()) {
    c.sources = c.normal_ids();
    if (c.sources.size() > 1) c.sources.push_back("ensemble");
  }
  if (c.sweep_param && c.sweep_sources.empty() && !c.normal_ids().empty()) c.sweep_sources = {c.normal_ids().front()};
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

}  // namespace daa

#endif  // DAATTACK_CONFIG_HPP
