// daattack: dataset / train / attack / sweep / report driver.
//
// Exit codes: 0 ok, 2 configuration error, 3 data-format error,
// 4 runtime or numeric error.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "daattack/harness.hpp"

namespace {

enum Exit { kOk = 0, kConfig = 2, kFormat = 3, kRuntime = 4 };

// Attack flags that override the config file.
struct AttackFlags {
  std::optional<std::string> attack;
  std::optional<std::string> source;
  std::optional<double> epsilon, alpha, mu, sigma, dim_prob, dim_min_scale;
  std::optional<std::size_t> iters, samples, kernel_radius, workers;
  std::optional<std::string> noise;
  std::optional<std::uint64_t> seed;
  std::optional<double> units;
  bool clean_anchor = false;

  void add(CLI::App* app) {
    app->add_option("--attack", attack, "preset: fgsm, i-fgsm, pgd, mi-fgsm, dim, tim, ti-dim, da-*");
    app->add_option("--source", source, "model id or 'ensemble'");
    app->add_option("--epsilon", epsilon, "L-inf budget (scale set by --units)");
    app->add_option("--iters", iters, "iterations T");
    app->add_option("--alpha", alpha, "step size (scale set by --units); default epsilon/T");
    app->add_option("--mu", mu, "momentum decay");
    app->add_option("--samples", samples, "sampling times N (N+1 draws)");
    app->add_option("--sigma", sigma, "Gaussian noise std in pixel units");
    app->add_option("--noise", noise, "gaussian or uniform")->check(CLI::IsMember({"gaussian", "uniform"}));
    app->add_option("--seed", seed, "attack seed");
    app->add_option("--dim-prob", dim_prob, "DIM transform probability");
    app->add_option("--dim-min-scale", dim_min_scale, "DIM smallest resize fraction");
    app->add_option("--kernel-radius", kernel_radius, "TIM kernel radius k ((2k+1)^2 kernel)");
    app->add_option("--units", units, "scale of --epsilon/--alpha: 255 or 1 (default: config)")
        ->check(CLI::IsMember({255.0, 1.0}));
    app->add_option("--workers", workers, "worker threads");
    app->add_flag("--clean-anchor", clean_anchor, "take the first aggregation term at the un-noised point");
  }

  void apply(daa::ExperimentConfig& c) const {
    const double u = units ? *units : c.units;
    if (attack) c.presets = {*attack}, c.sweep_preset = *attack;
    if (source) c.sources = {*source}, c.sweep_sources = {*source};
    if (epsilon) c.attack.epsilon = *epsilon / u;
    if (alpha) c.attack.alpha = *alpha / u;
    if (iters) c.attack.iters = *iters;
    if (mu) c.attack.mu = *mu;
    if (samples) c.attack.samples = *samples;
    if (noise) c.attack.noise.kind = *noise == "uniform" ? daa::NoiseKind::uniform : daa::NoiseKind::gaussian;
    if (sigma) c.attack.noise.sigma = *sigma;
    if (seed) c.attack_seed = *seed;
    if (dim_prob) c.attack.dim.p = *dim_prob;
    if (dim_min_scale) c.attack.dim.min_scale = *dim_min_scale;
    if (kernel_radius) c.attack.kernel_radius = *kernel_radius;
    if (workers) c.workers = *workers;
    if (clean_anchor) c.attack.clean_anchor = true;
    c.validate();
  }
};

void print_rows(const std::vector<daa::TransferRow>& rows) { std::cout << daa::rows_to_csv(rows); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Direction-aggregated transfer attacks on small classifiers"};
  app.require_subcommand(1);

  // dataset
  auto* ds = app.add_subcommand("dataset", "generate or import a DAKD dataset");
  ds->require_subcommand(1);
  auto* gen = ds->add_subcommand("gen", "generate a synthetic dataset");
  std::string gen_kind, out_path;
  daa::RingsOptions rings;
  daa::BlobsOptions blobs;
  std::size_t n = 0, hw = 0, classes = 0;
  std::optional<double> noise, contrast, spread;
  std::uint64_t gen_seed = 0;
  gen->add_option("kind", gen_kind, "rings or blobs")->required()->check(CLI::IsMember({"rings", "blobs"}));
  gen->add_option("--n", n, "number of examples");
  gen->add_option("--hw", hw, "image height = width");
  gen->add_option("--classes", classes, "class count");
  gen->add_option("--noise", noise, "rings: pixel noise std");
  gen->add_option("--contrast", contrast, "rings: peak ring amplitude");
  gen->add_option("--spread", spread, "blobs: pixel noise std");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--out", out_path, "output file")->required();
  auto* imp = ds->add_subcommand("import", "validate an existing DAKD file");
  std::string import_path, import_out;
  imp->add_option("path", import_path, "DAKD file")->required();
  imp->add_option("--out", import_out, "copy the validated file here");

  // config-driven commands
  std::string config_path;
  AttackFlags flags;
  std::vector<std::string> merge_inputs;
  std::optional<std::string> sweep_param;
  std::vector<double> sweep_grid;
  std::optional<std::size_t> train_workers;

  auto* tr = app.add_subcommand("train", "train the model zoo and write manifest.json");
  tr->add_option("--config", config_path, "experiment config")->required();
  tr->add_option("--workers", train_workers, "worker threads for evaluation");

  auto* at = app.add_subcommand("attack", "craft adversarial sets and evaluate transfer");
  at->add_option("--config", config_path, "experiment config")->required();
  flags.add(at);

  auto* sw = app.add_subcommand("sweep", "sweep one attack hyper-parameter");
  sw->add_option("--config", config_path, "experiment config")->required();
  sw->add_option("--param", sweep_param, "N, sigma, epsilon, T or alpha");
  sw->add_option("--grid", sweep_grid, "grid values (epsilon/alpha on the --units scale)")->delimiter(',');
  flags.add(sw);

  auto* rp = app.add_subcommand("report", "merge run artifacts into report.json / report.csv");
  rp->add_option("--config", config_path, "experiment config")->required();
  rp->add_option("--merge", merge_inputs, "additional artifact JSON files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (*ds) {
      if (*gen) {
        daa::Dataset d;
        if (gen_kind == "rings") {
          if (n) rings.n = n;
          if (hw) rings.hw = hw;
          if (classes) rings.classes = classes;
          if (noise) rings.noise = *noise;
          if (contrast) rings.contrast = *contrast;
          rings.seed = gen_seed;
          d = daa::cmd_dataset_gen_rings(rings, out_path);
        } else {
          if (n) blobs.n = n;
          if (hw) blobs.hw = hw;
          if (classes) blobs.classes = classes;
          if (spread) blobs.spread = *spread;
          blobs.seed = gen_seed;
          d = daa::cmd_dataset_gen_blobs(blobs, out_path);
        }
        std::cerr << "wrote " << d.size() << " examples " << daa::shape_str(d.image_shape()) << " to " << out_path
                  << "\n";
      } else {
        const daa::Dataset d = daa::cmd_dataset_import(import_path, import_out);
        std::cout << "ok: " << d.size() << " examples " << daa::shape_str(d.image_shape()) << ", " << d.num_classes
                  << " classes\n";
      }
      return kOk;
    }

    daa::ExperimentConfig cfg = daa::load_config(config_path);
    if (*tr) {
      if (train_workers) cfg.workers = *train_workers, cfg.validate();
      const auto manifest = daa::cmd_train(cfg, std::cerr);
      std::cout << manifest.dump(2) << "\n";
    } else if (*at) {
      flags.apply(cfg);
      print_rows(daa::cmd_attack(cfg, {}, {}, std::cerr));
    } else if (*sw) {
      if (sweep_param) cfg.sweep_param = daa::parse_sweep_param(*sweep_param);
      if (!cfg.sweep_param) throw daa::ConfigError("sweep: no parameter given (--param or sweep.param)");
      if (!sweep_grid.empty()) {
        cfg.sweep_grid = sweep_grid;
        const double u = flags.units ? *flags.units : cfg.units;
        if (*cfg.sweep_param == daa::SweepParam::epsilon || *cfg.sweep_param == daa::SweepParam::alpha)
          for (double& g : cfg.sweep_grid) g /= u;
      }
      if (cfg.sweep_param && cfg.sweep_sources.empty() && !cfg.normal_ids().empty())
        cfg.sweep_sources = {cfg.normal_ids().front()};
      flags.apply(cfg);
      const auto doc = daa::cmd_sweep(cfg, std::cerr);
      std::cout << doc.dump(2) << "\n";
    } else if (*rp) {
      const auto report = daa::cmd_report(cfg, merge_inputs, std::cerr);
      std::cout << daa::rows_to_csv(daa::report_rows(report));
    }
    return kOk;
  } catch (const daa::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const daa::FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kFormat;
  } catch (const daa::ArtifactError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kFormat;
  } catch (const daa::StructuralError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kFormat;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
}
