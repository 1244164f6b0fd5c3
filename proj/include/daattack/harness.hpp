#ifndef DAATTACK_HARNESS_HPP
#define DAATTACK_HARNESS_HPP

#include <algorithm>
#include <filesystem>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "analysis.hpp"
#include "artifacts.hpp"
#include "config.hpp"
#include "dataset.hpp"
#include "ensemble.hpp"
#include "model_io.hpp"
#include "train.hpp"
#include "zoo.hpp"

namespace daa {

namespace fs = std::filesystem;

namespace detail {

class NullBuffer : public std::streambuf {
 protected:
  int overflow(int c) override { return c; }
};

inline std::ostream& null_log() {
  static NullBuffer buf;
  static std::ostream os(&buf);
  return os;
}

inline std::string dump(const ojson& j) { return j.dump(2) + "\n"; }

}  // namespace detail

/// Dataset plus the train/test split the whole run works from.
struct Workspace {
  Dataset data;
  TrainTestSplit split;
  std::string dataset_hash;
};

/// Loads `dataset.path`; a missing file is a configuration error so it
/// surfaces before any work starts.
inline Workspace open_workspace(const ExperimentConfig& cfg) {
  if (!fs::is_regular_file(cfg.dataset_path))
    throw ConfigError("dataset '" + cfg.dataset_path + "' does not exist");
  auto bytes = io::Reader::slurp(cfg.dataset_path);
  Workspace ws;
  ws.dataset_hash = bytes_hash(bytes);
  ws.data = decode_dataset(std::move(bytes));
  ws.split = split(ws.data, cfg.test_fraction);
  return ws;
}

inline ModelSpec model_spec(const ModelEntry& m, const Dataset& data) {
  return parse_architecture(m.arch, data.image_shape(), data.num_classes);
}

inline TrainingDescriptor training_descriptor(const ExperimentConfig& cfg, const ModelEntry& m) {
  return m.robust ? TrainingDescriptor{true, cfg.adv_epsilon, cfg.adv_steps} : TrainingDescriptor{};
}

inline std::string model_path(const ExperimentConfig& cfg, const std::string& id) {
  return cfg.run_dir() + "/models/" + id + ".dakm";
}

// ---- dataset ---------------------------------------------------------------

inline Dataset cmd_dataset_gen_rings(const RingsOptions& o, const std::string& out) {
  Dataset d = make_rings(o);
  save_dataset(d, out);
  return d;
}

inline Dataset cmd_dataset_gen_blobs(const BlobsOptions& o, const std::string& out) {
  Dataset d = make_blobs(o);
  save_dataset(d, out);
  return d;
}

/// Validates a DAKD file; when `out` is given the validated bytes are copied there.
inline Dataset cmd_dataset_import(const std::string& path, const std::string& out = "") {
  auto bytes = io::Reader::slurp(path);
  Dataset d = decode_dataset(bytes);
  d.validate();
  if (!out.empty()) {
    io::Writer w;
    w.bytes(std::string_view(bytes.data(), bytes.size()));
    w.save(out);
  }
  return d;
}

// ---- train -----------------------------------------------------------------

/// Trains every zoo model not already present as a valid file in the run
/// directory, then writes manifest.json with clean and PGD accuracy.
inline ojson cmd_train(const ExperimentConfig& cfg, std::ostream& log = detail::null_log()) {
  const Workspace ws = open_workspace(cfg);
  std::vector<ModelSpec> specs;
  for (const auto& m : cfg.models) specs.push_back(model_spec(m, ws.data));
  fs::create_directories(cfg.run_dir() + "/models");

  const Dataset probe = ws.split.test.subset(0, std::min(cfg.eval_examples, ws.split.test.size()));
  ojson models = ojson::array();
  for (std::size_t i = 0; i < cfg.models.size(); ++i) {
    const ModelEntry& m = cfg.models[i];
    const std::string path = model_path(cfg, m.id);
    TrainHyper hyper = cfg.train;
    hyper.seed = cfg.stage_seed("train/" + m.id);
    const TrainingDescriptor want = training_descriptor(cfg, m);

    std::optional<Classifier> model;
    if (fs::is_regular_file(path)) {
      try {
        Classifier c = load_model(path);
        if (c.spec() == specs[i] && c.training == want && c.seed == hyper.seed) model = std::move(c);
      } catch (const FormatError&) {
      }
      log << (model ? "resume " : "retrain ") << m.id << "\n";
    }
    if (!model) {
      log << "train " << m.id << " (" << m.arch << (m.robust ? ", pgd" : "") << ")\n";
      const TrainMode mode = m.robust ? TrainMode::adversarial_pgd(cfg.adv_epsilon, cfg.adv_steps) : TrainMode::normal();
      model = train(specs[i], ws.split.train, hyper, mode);
      save_model(*model, path);
    }
    const double clean = accuracy(*model, ws.split.test);
    const double pgd =
        pgd_accuracy(*model, probe, cfg.adv_epsilon, cfg.eval_steps, cfg.stage_seed("eval/pgd"), cfg.workers);
    log << "  " << m.id << " clean=" << clean << " pgd=" << pgd << "\n";
    models.push_back({{"id", m.id},
                      {"arch", m.arch},
                      {"robust", m.robust},
                      {"seed", hyper.seed},
                      {"file_hash", bytes_hash(io::Reader::slurp(path))},
                      {"clean_accuracy", clean},
                      {"pgd_accuracy", pgd}});
  }
  ojson manifest = artifact_header("manifest", cfg.hash(), ws.dataset_hash);
  manifest["config"] = cfg.echo();
  manifest["pgd_epsilon"] = cfg.adv_epsilon;
  manifest["pgd_steps"] = cfg.eval_steps;
  manifest["models"] = models;
  write_text(cfg.run_dir() + "/manifest.json", detail::dump(manifest));
  return manifest;
}

/// The trained zoo, in config order.
struct Zoo {
  std::vector<ModelEntry> entries;
  std::vector<Classifier> models;

  const Classifier& get(const std::string& id) const {
    for (std::size_t i = 0; i < entries.size(); ++i)
      if (entries[i].id == id) return models[i];
    throw ConfigError("unknown model id '" + id + "'");
  }

  std::vector<NamedModel> targets() const {
    std::vector<NamedModel> out;
    for (std::size_t i = 0; i < entries.size(); ++i) out.push_back({entries[i].id, &models[i], entries[i].robust});
    return out;
  }

  Ensemble normal_ensemble() const {
    std::vector<std::reference_wrapper<const Classifier>> members;
    for (std::size_t i = 0; i < entries.size(); ++i)
      if (!entries[i].robust) members.emplace_back(models[i]);
    return Ensemble(std::move(members));
  }
};

inline Zoo load_zoo(const ExperimentConfig& cfg, const Workspace& ws) {
  const std::string manifest_path = cfg.run_dir() + "/manifest.json";
  if (!fs::is_regular_file(manifest_path)) throw ConfigError("no trained zoo under " + cfg.run_dir() + "; run train first");
  const ojson manifest = parse_json_artifact(read_text(manifest_path), "manifest");
  if (manifest.value("dataset_hash", "") != ws.dataset_hash)
    throw ArtifactError("manifest was produced from a different dataset");
  Zoo z;
  for (const auto& m : cfg.models) {
    Classifier c = load_model(model_path(cfg, m.id));
    if (c.spec() != model_spec(m, ws.data) || c.training != training_descriptor(cfg, m))
      throw ArtifactError("model file for '" + m.id + "' does not match the config; rerun train");
    z.entries.push_back(m);
    z.models.push_back(std::move(c));
  }
  return z;
}

/// First `max_examples` test examples classified correctly by every zoo model.
inline EvalSet build_eval_set(const Zoo& zoo, const Dataset& test, std::size_t max_examples,
                              std::ostream& log = detail::null_log()) {
  EvalSet ev;
  std::size_t kept = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const Tensor x = test.example(i);
    bool ok = true;
    for (const auto& m : zoo.models) ok = ok && predict(m, x) == test.labels[i];
    if (!ok) continue;
    ++kept;
    if (ev.size() < max_examples) {
      ev.xs.push_back(x);
      ev.labels.push_back(test.labels[i]);
      ev.positions.push_back(i);
    }
  }
  log << "eval filter: " << kept << " of " << test.size() << " test examples correct on all models, using "
      << ev.size() << "\n";
  if (ev.size() == 0) throw ArgumentError("no test example is classified correctly by every model");
  return ev;
}

// ---- attack ----------------------------------------------------------------

inline std::string attack_stem(const ExperimentConfig& cfg, const std::string& preset, const std::string& source) {
  return cfg.run_dir() + "/attacks/" + preset + "__" + source;
}

inline std::vector<std::string> white_box_ids(const ExperimentConfig& cfg, const std::string& source) {
  return source == "ensemble" ? cfg.normal_ids() : std::vector<std::string>{source};
}

/// Crafts D* for every (preset, source), writes the set plus its
/// evaluation rows over every zoo target. Empty overrides fall back to the
/// config lists.
inline std::vector<TransferRow> cmd_attack(const ExperimentConfig& cfg, std::vector<std::string> presets = {},
                                           std::vector<std::string> sources = {},
                                           std::ostream& log = detail::null_log()) {
  if (presets.empty()) presets = cfg.presets;
  if (sources.empty()) sources = cfg.sources;
  for (const auto& p : presets) parse_preset(p);
  for (const auto& s : sources)
    if (s != "ensemble" && !cfg.find_model(s)) throw ConfigError("source '" + s + "' is not a model id");
  const Workspace ws = open_workspace(cfg);
  const Zoo zoo = load_zoo(cfg, ws);
  const EvalSet ev = build_eval_set(zoo, ws.split.test, cfg.examples, log);
  const Ensemble ens = zoo.normal_ensemble();
  fs::create_directories(cfg.run_dir() + "/attacks");

  std::vector<TransferRow> all;
  for (const auto& preset : presets) {
    const AttackConfig ac = cfg.attack_config(preset);
    for (const auto& source : sources) {
      log << "attack " << preset << " on " << source << "\n";
      const SourceModel sm = source == "ensemble" ? SourceModel(&ens) : SourceModel(&zoo.get(source));
      const AdversarialSet set = generate_adversarial_set(sm, ev, ac, source, preset, cfg.workers);
      const std::string stem = attack_stem(cfg, preset, source);
      io::Writer w;
      const auto bytes = encode_adversarial_set(set, cfg.hash());
      w.bytes(std::string_view(bytes.data(), bytes.size()));
      w.save(stem + ".daka");
      const auto rows = evaluate_transfer(set, zoo.targets(), white_box_ids(cfg, source), cfg.seed, cfg.workers);
      ojson doc = artifact_header("attack", cfg.hash(), ws.dataset_hash);
      doc["rows"] = rows_to_json(rows);
      write_text(stem + ".json", detail::dump(doc));
      write_text(stem + ".csv", rows_to_csv(rows));
      all.insert(all.end(), rows.begin(), rows.end());
    }
  }
  return all;
}

// ---- sweep -----------------------------------------------------------------

inline ojson sweep_to_json(const SweepCurve& c, const std::vector<double>& grid) {
  ojson points = ojson::array();
  for (const auto& p : c.points) points.push_back({{"value", p.value}, {"rows", rows_to_json(p.rows)}});
  return {{"param", sweep_param_name(c.param)}, {"attack", c.attack}, {"grid", grid}, {"points", points}};
}

/// Runs the configured sweep; epsilon/alpha values are reported in pixel units.
inline ojson cmd_sweep(const ExperimentConfig& cfg, std::ostream& log = detail::null_log()) {
  if (!cfg.sweep_param) throw ConfigError("sweep: 'sweep.param' is not set");
  const Workspace ws = open_workspace(cfg);
  const Zoo zoo = load_zoo(cfg, ws);
  const EvalSet ev = build_eval_set(zoo, ws.split.test, cfg.examples, log);
  const Ensemble ens = zoo.normal_ensemble();
  std::vector<SweepSource> sources;
  for (const auto& s : cfg.sweep_sources)
    sources.push_back({s, s == "ensemble" ? SourceModel(&ens) : SourceModel(&zoo.get(s)), white_box_ids(cfg, s)});
  log << "sweep " << sweep_param_name(*cfg.sweep_param) << " over " << cfg.sweep_grid.size() << " points\n";
  const SweepCurve curve = sweep(*cfg.sweep_param, cfg.sweep_grid, cfg.attack_config(cfg.sweep_preset), cfg.sweep_preset,
                                 sources, zoo.targets(), ev, cfg.workers);
  ojson doc = artifact_header("sweep", cfg.hash(), ws.dataset_hash);
  doc["sweep"] = sweep_to_json(curve, cfg.sweep_grid);
  fs::create_directories(cfg.run_dir() + "/sweeps");
  write_text(cfg.run_dir() + "/sweeps/" + std::string(sweep_param_name(*cfg.sweep_param)) + "__" + cfg.sweep_preset +
                 ".json",
             detail::dump(doc));
  return doc;
}

// ---- report ----------------------------------------------------------------

inline std::vector<std::string> list_files(const std::string& dir, std::string_view ext) {
  std::vector<std::string> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ext) out.push_back(e.path().string());
  std::sort(out.begin(), out.end());
  return out;
}

/// Pairwise perturbation cosine for every preset crafted on >= 2 single sources.
inline ojson similarity_section(const ExperimentConfig& cfg) {
  ojson out = ojson::array();
  std::vector<std::string> singles;
  for (const auto& s : cfg.sources)
    if (s != "ensemble") singles.push_back(s);
  std::optional<Zoo> zoo;
  for (const auto& preset : cfg.presets) {
    std::vector<AdversarialSet> sets;
    for (const auto& s : singles) {
      const std::string path = attack_stem(cfg, preset, s) + ".daka";
      if (fs::is_regular_file(path)) sets.push_back(decode_adversarial_set(io::Reader::slurp(path)));
    }
    if (sets.size() < 2) continue;
    std::vector<const AdversarialSet*> ptrs;
    for (const auto& s : sets) ptrs.push_back(&s);
    std::vector<char> mask;
    if (cfg.cosine_successful_only) {
      if (!zoo) zoo = load_zoo(cfg, open_workspace(cfg));
      mask.assign(sets.front().size(), 1);
      for (const auto& s : sets) {
        const Classifier& m = zoo->get(s.source);
        for (std::size_t i = 0; i < s.size(); ++i)
          if (predict(m, s.items[i].x_star) == s.items[i].label) mask[i] = 0;
      }
    }
    const CosineMatrix cm = perturbation_cosine(ptrs, cfg.cosine_successful_only ? &mask : nullptr);
    out.push_back({{"attack", preset},
                   {"examples", cfg.cosine_successful_only ? "successful" : "all"},
                   {"sources", cm.sources},
                   {"mean", cm.mean},
                   {"skipped", cm.skipped},
                   {"mean_off_diagonal", cm.mean_off_diagonal()}});
  }
  return out;
}

/// Merges every attack and sweep artifact of the run (plus `extra` files)
/// into report.json / report.csv.
inline ojson cmd_report(const ExperimentConfig& cfg, const std::vector<std::string>& extra = {},
                        std::ostream& log = detail::null_log()) {
  std::vector<std::string> files = list_files(cfg.run_dir() + "/attacks", ".json");
  for (const auto& f : list_files(cfg.run_dir() + "/sweeps", ".json")) files.push_back(f);
  files.insert(files.end(), extra.begin(), extra.end());
  std::vector<ojson> docs;
  for (const auto& f : files) docs.push_back(parse_json_artifact(read_text(f), f));
  log << "report: merging " << docs.size() << " artifacts\n";
  ojson report = merge_reports(docs, cfg.echo(), cfg.hash());
  report["similarity"] = similarity_section(cfg);
  fs::create_directories(cfg.run_dir());
  write_text(cfg.run_dir() + "/report.json", detail::dump(report));
  write_text(cfg.run_dir() + "/report.csv", rows_to_csv(report_rows(report)));
  return report;
}

}  // namespace daa

#endif  // DAATTACK_HARNESS_HPP
