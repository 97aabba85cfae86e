#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ido/campaign.hpp"
#include "ido/descriptor.hpp"
#include "ido/error.hpp"
#include "ido/metrics.hpp"
#include "ido/perturb.hpp"
#include "ido/registrar.hpp"
#include "ido/regressor.hpp"
#include "ido/shapes.hpp"

using namespace ido;
namespace fs = std::filesystem;

namespace {

// Flags shared by every subcommand. Unset optionals leave the config value alone.
struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string model;  // normalized model PLY/CSV; empty: build from the config
  bool force = false;
};

ExperimentConfig load_config(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : load_experiment_config(c.config);
  if (c.seed) {
    cfg.seed = *c.seed;
    cfg.campaign.seed = *c.seed;
  }
  cfg.campaign.force = cfg.campaign.force || c.force;
  return cfg;
}

PointCloud build_model(const ModelConfig& m, std::uint64_t seed) {
  if (m.input.empty()) return synthetic_model(m.shape, m.points, seed);
  return normalize_to_unit(downsample_average(load_cloud(m.input), m.points)).cloud;
}

PointCloud resolve_model(const Common& c, const ExperimentConfig& cfg) {
  if (!c.model.empty()) return normalize_to_unit(load_cloud(c.model)).cloud;
  return build_model(cfg.model, cfg.seed);
}

void add_common(CLI::App* app, Common& c, bool seed_required) {
  app->add_option("--config", c.config, "Experiment JSON");
  auto* s = app->add_option("--seed", c.seed, "Master seed (overrides the config)");
  if (seed_required) s->required();
  app->add_option("--model", c.model, "Normalized model cloud (.ply/.csv); default: built from the config");
  app->add_flag("--force", c.force, "Accept maps trained on a different model");
}

fs::path sample_dir(const fs::path& root, std::size_t i) {
  char name[32];
  std::snprintf(name, sizeof name, "sample_%05zu", i);
  return root / name;
}

void ensure_parent(const fs::path& file) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
}

TrainingSet load_training_dir(const fs::path& root) {
  TrainingSet set;
  for (std::size_t i = 0; fs::is_directory(sample_dir(root, i)); ++i) {
    LabeledPair p = load_pair(sample_dir(root, i));
    set.samples.push_back({Twist::zero(), p.x_star, std::move(p.scene)});
  }
  if (set.samples.empty()) throw Error("no sample_NNNNN directories under " + root.string());
  return set;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discriminative-optimization point-cloud registration"};
  app.require_subcommand(1);

  // gen-model ---------------------------------------------------------------
  Common gm;
  std::string gm_out, gm_shape, gm_input;
  std::optional<std::size_t> gm_points;
  auto* gen_model = app.add_subcommand("gen-model", "Write a normalized model cloud");
  add_common(gen_model, gm, false);
  gen_model->add_option("--shape", gm_shape, "Synthetic shape: bunny, sphere");
  gen_model->add_option("--input", gm_input, "Dense PLY/CSV to downsample instead of a synthetic shape");
  gen_model->add_option("--points", gm_points, "Target point count");
  gen_model->add_option("-o,--output", gm_out, "Output .ply or .csv")->required();

  // gen-data ----------------------------------------------------------------
  Common gd;
  std::string gd_kind = "training", gd_out;
  std::optional<std::size_t> gd_samples, gd_per_level;
  auto* gen_data = app.add_subcommand("gen-data", "Generate a training set or the test sweeps");
  add_common(gen_data, gd, true);
  gen_data->add_option("--kind", gd_kind, "training | sweeps")->check(CLI::IsMember({"training", "sweeps"}));
  gen_data->add_option("--samples", gd_samples, "Training pairs");
  gen_data->add_option("--per-level", gd_per_level, "Sweep pairs per level");
  gen_data->add_option("-o,--output", gd_out, "Output directory")->required();

  // train -------------------------------------------------------------------
  Common tr;
  std::string tr_data, tr_out, tr_trace, tr_mode = "improved", tr_solver;
  std::optional<std::size_t> tr_samples, tr_maps;
  std::optional<double> tr_lambda, tr_sigma2;
  auto* train_cmd = app.add_subcommand("train", "Learn the map sequence and write an IDO1 file");
  add_common(train_cmd, tr, true);
  train_cmd->add_option("--data", tr_data, "Training directory from gen-data; default: generate in memory");
  train_cmd->add_option("--samples", tr_samples, "Training pairs when generating in memory");
  train_cmd->add_option("--mode", tr_mode, "improved | original");
  train_cmd->add_option("--maps", tr_maps, "Number of maps K");
  train_cmd->add_option("--lambda", tr_lambda, "Ridge regularization");
  train_cmd->add_option("--sigma2", tr_sigma2, "Gaussian width");
  train_cmd->add_option("--solver", tr_solver, "exact | averaged");
  train_cmd->add_option("--trace", tr_trace, "Training-error CSV");
  train_cmd->add_option("-o,--output", tr_out, "Map file (.ido1)")->required();

  // register ----------------------------------------------------------------
  Common rg;
  std::string rg_scene, rg_maps, rg_trace, rg_hist, rg_algorithm = "improved-do", rg_metric = "inliers";
  std::optional<std::size_t> rg_max_iter;
  std::optional<double> rg_epsilon;
  auto* reg = app.add_subcommand("register", "Register one scene and write its trace");
  add_common(reg, rg, false);
  reg->add_option("--scene", rg_scene, "Scene cloud file or pair directory")->required();
  reg->add_option("--algorithm", rg_algorithm, "improved-do | original-do | icp");
  reg->add_option("--maps", rg_maps, "Map file; default: the config's map path for the algorithm");
  reg->add_option("--max-iterations", rg_max_iter);
  reg->add_option("--epsilon", rg_epsilon);
  reg->add_option("--trace", rg_trace, "Per-iteration CSV");
  reg->add_option("--histograms", rg_hist, "Per-iteration histogram CSV (DO only)");
  reg->add_option("--metric-points", rg_metric, "inliers | all");

  // bench -------------------------------------------------------------------
  Common bn;
  std::string bn_out, bn_data, bn_metric;
  std::vector<std::string> bn_algorithms;
  std::optional<std::size_t> bn_per_level;
  auto* bench = app.add_subcommand("bench", "Run the perturbation sweeps for every algorithm");
  add_common(bench, bn, false);
  bench->add_option("--output-dir", bn_out);
  bench->add_option("--data-dir", bn_data, "Read sweep pairs written by gen-data --kind sweeps");
  bench->add_option("--algorithms", bn_algorithms);
  bench->add_option("--per-level", bn_per_level);
  bench->add_option("--metric-points", bn_metric, "inliers | all");

  // summarize ---------------------------------------------------------------
  std::string sm_in, sm_csv;
  auto* summ = app.add_subcommand("summarize", "Average the level files of a bench run");
  summ->add_option("input", sm_in, "bench output directory")->required();
  summ->add_option("--csv", sm_csv, "Summary CSV; default: <input>/summary.csv");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen_model) {
      ExperimentConfig cfg = load_config(gm);
      if (!gm_shape.empty()) cfg.model.shape = gm_shape;
      if (!gm_input.empty()) cfg.model.input = gm_input;
      if (gm_points) cfg.model.points = *gm_points;
      const PointCloud model = build_model(cfg.model, cfg.seed);
      ensure_parent(gm_out);
      if (fs::path(gm_out).extension() == ".csv")
        save_csv(gm_out, model);
      else
        save_ply(gm_out, model);
      std::cout << "model: " << model.size() << " points -> " << gm_out << '\n';
    } else if (*gen_data) {
      ExperimentConfig cfg = load_config(gd);
      const PointCloud model = resolve_model(gd, cfg);
      if (gd_kind == "training") {
        const std::size_t n = gd_samples.value_or(cfg.training.samples);
        const auto data = generate_training_set(model, n, cfg.training.ranges, cfg.seed);
        if (data.outside_training_extents) std::cerr << "warning: training ranges exceed the standard extents\n";
        for (std::size_t i = 0; i < n; ++i) save_pair(sample_dir(gd_out, i), generate_pair(model, data.specs[i]));
        std::cout << n << " training pairs -> " << gd_out << '\n';
      } else {
        std::size_t total = 0;
        for (auto& sweep : cfg.campaign.sweeps) {
          if (gd_per_level) sweep.per_level = *gd_per_level;
          const auto cases = generate_sweep(model, sweep.perturbation, sweep.levels, sweep.per_level, cfg.campaign.seed,
                                            cfg.campaign.base);
          write_sweep_pairs(gd_out, sweep.perturbation, cases);
          total += cases.size();
        }
        std::cout << total << " sweep pairs -> " << gd_out << '\n';
      }
    } else if (*train_cmd) {
      ExperimentConfig cfg = load_config(tr);
      TrainingConfig& t = cfg.training;
      if (tr_maps) t.options.maps = *tr_maps;
      if (tr_lambda) t.options.lambda = *tr_lambda;
      if (tr_sigma2) t.sigma2 = *tr_sigma2;
      if (!tr_solver.empty()) t.options.solver = parse_ridge_solver(tr_solver);
      const PointCloud model = resolve_model(tr, cfg);
      const ModelContext ctx = ModelContext::build(model, t.sigma2, parse_descriptor_mode(tr_mode));
      const TrainingSet set = tr_data.empty()
                                  ? generate_training_set(model, tr_samples.value_or(t.samples), t.ranges, cfg.seed).set
                                  : load_training_dir(tr_data);
      const TrainingResult r = train(ctx, set, t.options);
      ensure_parent(tr_out);
      save_maps(tr_out, r.maps);
      if (!tr_trace.empty()) {
        std::ofstream out(tr_trace);
        write_training_trace(out, r.trace);
      }
      std::cout << "trained " << r.maps.maps.size() << " maps on " << set.samples.size() << " pairs, mean error "
                << r.trace.mean_error.front() << " -> " << r.trace.mean_error.back() << '\n';
    } else if (*reg) {
      const ExperimentConfig cfg = load_config(rg);
      const PointCloud model = resolve_model(rg, cfg);
      std::optional<LabeledPair> pair;
      PointCloud scene;
      if (fs::is_directory(rg_scene)) {
        pair = load_pair(rg_scene);
        scene = pair->scene;
      } else {
        scene = load_cloud(rg_scene);
      }
      const Algorithm alg = parse_algorithm(rg_algorithm);
      RegistrationResult r;
      if (alg == Algorithm::icp) {
        IcpOptions o = cfg.campaign.icp_options;
        if (rg_max_iter) o.max_iterations = *rg_max_iter;
        r = register_icp(model, scene, {}, o);
      } else {
        const MapSequence maps = load_maps(rg_maps.empty() ? cfg.maps_path(alg) : fs::path(rg_maps));
        const DescriptorMode want = alg == Algorithm::improved_do ? DescriptorMode::improved : DescriptorMode::original;
        const ModelContext ctx = ModelContext::build(model, maps.sigma2, want);
        maps.check_compatible(ctx, cfg.campaign.force);
        DoOptions o = cfg.campaign.do_options;
        if (rg_max_iter) o.max_iterations = *rg_max_iter;
        if (rg_epsilon) o.epsilon = *rg_epsilon;
        o.record_histograms = !rg_hist.empty();
        r = register_do(ctx, maps, scene, Twist::zero(), o);
        if (!rg_hist.empty()) {
          std::ofstream out(rg_hist);
          for (const auto& s : r.trace)
            if (s.histogram) write_histogram_row(out, s.iteration, *s.histogram);
        }
      }
      if (!rg_trace.empty()) {
        std::ofstream out(rg_trace);
        write_trace_csv(out, r);
      }
      std::cout << "iterations " << r.iterations << " (" << to_string(r.terminated_by) << ")\nx";
      for (int c = 0; c < 6; ++c) std::cout << ' ' << r.x_final.coeffs[c];
      std::cout << '\n';
      if (pair) {
        const PairMetrics m = evaluate_pair(*pair, r.T_final, parse_metric_points(rg_metric), cfg.campaign.t_pt);
        std::cout << "point_acc " << m.point_acc << "\npoint_rmse " << m.point_rmse << '\n';
      }
    } else if (*bench) {
      ExperimentConfig cfg = load_config(bn);
      CampaignConfig& cc = cfg.campaign;
      if (!bn_out.empty()) cfg.output_dir = bn_out;
      cc.output_dir = cfg.output_dir;
      if (!bn_data.empty()) cc.data_dir = bn_data;
      if (!bn_metric.empty()) cc.metric_points = parse_metric_points(bn_metric);
      if (bn_per_level)
        for (auto& s : cc.sweeps) s.per_level = *bn_per_level;
      if (!bn_algorithms.empty()) {
        cc.algorithms.clear();
        for (const auto& a : bn_algorithms) cc.algorithms.push_back(parse_algorithm(a));
      }
      if (cc.sweeps.empty()) {
        std::cout << "no sweeps configured\n";
        return 0;
      }
      const PointCloud model = resolve_model(bn, cfg);
      std::optional<MapSequence> maps_improved, maps_original;
      std::optional<ModelContext> ctx_improved, ctx_original;
      CampaignInputs inputs{model, std::nullopt, std::nullopt};
      for (Algorithm a : cc.algorithms) {
        if (a == Algorithm::icp) continue;
        auto& maps = a == Algorithm::improved_do ? maps_improved : maps_original;
        auto& ctx = a == Algorithm::improved_do ? ctx_improved : ctx_original;
        maps = load_maps(cfg.maps_path(a));
        ctx = ModelContext::build(model, maps->sigma2, maps->mode);
        (a == Algorithm::improved_do ? inputs.improved : inputs.original) = DoVariant{&*ctx, &*maps};
      }
      const auto reports = run_campaign(cc, inputs, &std::cerr);
      const SummaryTable table = summarize(reports);
      std::ofstream csv(cfg.output_dir / "summary.csv");
      write_summary_csv(csv, table);
      write_summary_text(std::cout, table);
    } else if (*summ) {
      const SummaryTable table = summarize(load_reports(sm_in));
      std::ofstream csv(sm_csv.empty() ? fs::path(sm_in) / "summary.csv" : fs::path(sm_csv));
      write_summary_csv(csv, table);
      write_summary_text(std::cout, table);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
