// alphainv command-line tool: render, train, sweep, stats, init-solve, table, selftest.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <nlohmann/json.hpp>

#include "alphainv/alphainv.hpp"
#include "selftest.hpp"

#ifndef ALPHAINV_GIT_DESCRIBE
#define ALPHAINV_GIT_DESCRIBE "unknown"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace alphainv::tools {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitDiverged = 2;

struct Common {
  std::string out_dir = ".";
  int threads = 1;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--out", c.out_dir, "Output directory (created if missing)")->capture_default_str();
  sub->add_option("--threads", c.threads, "Worker threads; results do not depend on it")
      ->check(CLI::Range(1, 256))
      ->capture_default_str();
}

/// Collects what a run did; written as manifest.json in the output directory.
struct Run {
  std::string subcommand;
  std::vector<std::string> argv;
  Common common;
  json config = json::object();
  std::vector<std::string> outputs;

  fs::path path(const std::string& name) const { return fs::path(common.out_dir) / name; }

  void write(const std::string& name, const std::string& text) {
    fs::create_directories(common.out_dir);
    std::ofstream f(path(name), std::ios::binary);
    if (!f) throw DomainError(fmt::format("cannot write {}", path(name).string()));
    f << text;
    outputs.push_back(name);
  }

  void write_ppm_file(const std::string& name, const Image& img) {
    fs::create_directories(common.out_dir);
    write_ppm(path(name).string(), img);
    outputs.push_back(name);
  }

  void write_manifest(int exit_code, const std::string& error) const {
    json m;
    m["tool"] = "alphainv";
    m["version"] = ALPHAINV_GIT_DESCRIBE;
    m["subcommand"] = subcommand;
    m["argv"] = argv;
    m["threads"] = common.threads;
    m["config"] = config;
    m["outputs"] = outputs;
    m["exit_code"] = exit_code;
    if (!error.empty()) m["error"] = error;
    fs::create_directories(common.out_dir);
    std::ofstream f(path("manifest.json"), std::ios::binary);
    f << m.dump(2) << "\n";
  }
};

SceneSpec scaled_scene(const std::string& name_or_path, double k) {
  if (!(k > 0.0) || !std::isfinite(k)) throw DomainError(fmt::format("--k must be > 0, got {}", k));
  const SceneSpec base = resolve_scene(name_or_path);
  return k == 1.0 ? base : scale_scene(base, k);
}

json activation_json(const ActivationConfig& a) {
  return {{"kind", to_string(a.kind)}, {"offset", a.offset}, {"log_L", a.log_L}};
}

ActivationConfig activation_from_json(const json& j) {
  ActivationConfig a;
  a.kind = parse_activation(j.at("kind").get<std::string>());
  a.offset = j.at("offset").get<double>();
  a.log_L = j.at("log_L").get<double>();
  a.validate();
  return a;
}

/// Field options shared by train, sweep and stats.
struct FieldOptions {
  std::string kind = "voxel_grid";
  std::uint32_t resolution = 32;
  std::uint32_t hidden = 32;
  double tau = 1.0;
  double T_prime = 0.99;

  void add(CLI::App* sub) {
    sub->add_option("--field", kind, "constant | voxel_grid | tiny_mlp")->capture_default_str();
    sub->add_option("--res", resolution, "Voxel grid resolution per axis")->check(CLI::Range(2u, 256u))
        ->capture_default_str();
    sub->add_option("--hidden", hidden, "Tiny MLP hidden width")->check(CLI::Range(1u, 1024u))->capture_default_str();
    sub->add_option("--tau", tau, "Target std of the raw density output at init")->capture_default_str();
    sub->add_option("--T", T_prime, "Target mean transmittance for high_t init")->capture_default_str();
  }

  void apply(SweepConfig& cfg) const {
    cfg.field_kind = parse_field_kind(kind);
    switch (cfg.field_kind) {
      case FieldKind::Constant:
        cfg.field_metadata = {};
        break;
      case FieldKind::VoxelGrid:
        cfg.field_metadata = {resolution};
        break;
      case FieldKind::TinyMlp:
        cfg.field_metadata = {3, hidden, hidden, 4};
        cfg.train.learning_rate = kMlpLearningRate;
        break;
    }
    cfg.field_tau = tau;
    cfg.T_prime = T_prime;
  }

  json to_json() const {
    return {{"kind", kind}, {"res", resolution}, {"hidden", hidden}, {"tau", tau}, {"T_prime", T_prime}};
  }
};

/// Training options shared by train and sweep.
struct TrainOptions {
  std::size_t steps = 0;
  std::size_t batch = 256;
  std::optional<double> lr;
  std::size_t samples = 64;

  void add(CLI::App* sub, std::size_t default_steps) {
    steps = default_steps;
    sub->add_option("--steps", steps, "Optimizer steps per run")->check(CLI::Range(std::size_t{0}, std::size_t{20000}))
        ->capture_default_str();
    sub->add_option("--batch", batch, "Rays per step")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--lr", lr, "Learning rate (default: project constant for the field kind)");
    sub->add_option("--samples", samples, "Stratified samples per ray")->check(CLI::PositiveNumber)
        ->capture_default_str();
  }

  void apply(SweepConfig& cfg, int threads) const {
    cfg.train.steps = steps;
    cfg.train.batch_rays = batch;
    if (lr) cfg.train.learning_rate = *lr;
    cfg.train.sampler.n_samples = samples;
    cfg.train.threads = threads;
    cfg.train.validate();
  }

  json to_json(const SweepConfig& cfg) const {
    return {{"steps", cfg.train.steps},
            {"batch", cfg.train.batch_rays},
            {"lr", cfg.train.learning_rate},
            {"samples", cfg.train.sampler.n_samples},
            {"optimizer", "adam"}};
  }
};

/// A trained field as written by `train`.
struct LoadedRun {
  SceneSpec scene;
  Field field;
  ActivationConfig act;
  double k = 1.0;
};

LoadedRun load_run(const std::string& dir) {
  const fs::path meta = fs::path(dir) / "train.json";
  std::ifstream in(meta);
  if (!in) throw ConfigError(meta.string(), "cannot open (expected the output directory of `alphainv train`)");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(meta.string(), e.what());
  }
  return {parse_scene(j.at("scene")), load_checkpoint((fs::path(dir) / "field.ckpt").string()),
          activation_from_json(j.at("activation")), j.at("k").get<double>()};
}

// ---------------------------------------------------------------------------

struct RenderArgs {
  std::string scene;
  double k = 1.0;
  std::size_t camera = 0;
  std::string run_dir;
  std::size_t samples = 256;
};

int cmd_render(Run& run, const RenderArgs& a) {
  if (a.run_dir.empty() && a.scene.empty()) throw ConfigError("--scene", "required unless --run is given");
  if (!a.run_dir.empty()) {
    const LoadedRun r = load_run(a.run_dir);
    if (a.camera >= r.scene.cameras.size()) throw DomainError("--camera out of range");
    const SamplerSpec sampler{SamplerKind::Uniform, a.samples, 0, 0, Contraction::None};
    run.config = {{"run", a.run_dir}, {"camera", a.camera}, {"samples", a.samples}, {"k", r.k},
                  {"activation", activation_json(r.act)}};
    const Image img = render_view(r.field, r.act, r.scene, a.camera, sampler, run.common.threads);
    run.write_ppm_file(report_filename("render", r.scene.name, r.k, to_string(r.act.kind), "ppm"), img);
    return kExitOk;
  }
  const SceneSpec scene = scaled_scene(a.scene, a.k);
  if (a.camera >= scene.cameras.size()) throw DomainError("--camera out of range");
  run.config = {{"scene", scene_to_json(scene)}, {"k", a.k}, {"camera", a.camera}};
  const Image img = ground_truth_view(scene, a.camera, kDefaultOracleResolution, run.common.threads);
  run.write_ppm_file(report_filename("render", scene.name, a.k, "oracle", "ppm"), img);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string scene;
  double k = 1.0;
  std::string activation = "exp_gumbel";
  std::string init = "high_t";
  std::uint64_t seed = 0;
  FieldOptions field;
  TrainOptions opts;
};

int cmd_train(Run& run, const TrainArgs& a) {
  const SceneSpec base = resolve_scene(a.scene);
  if (!(a.k > 0.0) || !std::isfinite(a.k)) throw DomainError(fmt::format("--k must be > 0, got {}", a.k));
  const Recipe recipe = parse_recipe(a.activation + ":" + a.init);
  SweepConfig cfg;
  a.field.apply(cfg);
  a.opts.apply(cfg, run.common.threads);

  CellSetup cell = prepare_cell(base, a.k, recipe, a.seed, cfg);
  const SceneSpec scene = cell.scene;
  run.config = {{"scene", scene_to_json(scene)}, {"k", a.k},          {"recipe", to_string(recipe)},
                {"seed", a.seed},                {"L", cell.L},         {"field", a.field.to_json()},
                {"train", a.opts.to_json(cfg)},  {"activation", activation_json(cell.act)}};

  const int threads = run.common.threads;
  const TrainingSet data = make_training_set(scene, cfg.oracle_resolution, threads);
  const SamplerSpec eval{SamplerKind::Uniform, cfg.train.sampler.n_samples, 0, 0, Contraction::None};
  const Rendered init_render = render_rays(cell.field, cell.act, data.rays, eval, threads);
  double init_t = 0.0;
  for (double t : init_render.transmittance) init_t += t;
  init_t /= static_cast<double>(init_render.transmittance.size());

  TrainConfig tc = cfg.train;
  tc.activation = cell.act;
  tc.seed = a.seed;
  const TrainResult r = train(data, std::move(cell.field), tc);
  const double psnr_db =
      r.diverged ? 0.0 : evaluate_psnr(r.field, r.activation, data, eval.n_samples, Contraction::None, threads);
  const bool diverged = r.diverged || !std::isfinite(psnr_db) || psnr_db < kDivergedPsnr;

  const std::string act_name(to_string(recipe.activation));
  run.write(report_filename("loss", scene.name, a.k, act_name, "csv"), loss_curve_csv(r.loss_curve));
  fs::create_directories(run.common.out_dir);
  save_checkpoint(r.field, run.path("field.ckpt").string());
  run.outputs.push_back("field.ckpt");
  json summary = {{"scene", scene_to_json(scene)},
                  {"k", a.k},
                  {"recipe", to_string(recipe)},
                  {"seed", a.seed},
                  {"activation", activation_json(r.activation)},
                  {"init_mean_transmittance", init_t},
                  {"psnr_db", psnr_db},
                  {"diverged", diverged}};
  run.write("train.json", summary.dump(2) + "\n");
  if (!diverged) {
    run.write_ppm_file(report_filename("render", scene.name, a.k, act_name, "ppm"),
                       render_view(r.field, r.activation, scene, 0, eval, threads));
  }
  fmt::print("{} k={} {} seed={}: init T {:.4f}, PSNR {:.2f} dB{}\n", scene.name, a.k, to_string(recipe), a.seed,
             init_t, psnr_db, diverged ? " (diverged)" : "");
  return diverged ? kExitDiverged : kExitOk;
}

// ---------------------------------------------------------------------------

struct SweepArgs {
  std::string scene;
  std::vector<double> ks{0.1, 1.0, 10.0, 25.0};
  std::vector<std::string> recipes{"exp_gumbel:high_t"};
  std::vector<std::uint64_t> seeds{0};
  FieldOptions field;
  TrainOptions opts;
};

int cmd_sweep(Run& run, SweepArgs a) {
  const SceneSpec base = resolve_scene(a.scene);
  if (std::find(a.ks.begin(), a.ks.end(), 1.0) == a.ks.end()) {
    a.ks.insert(a.ks.begin(), 1.0);
    fmt::print(stderr, "note: added k = 1 as the control column\n");
  }
  std::vector<Recipe> recipes;
  for (const auto& r : a.recipes) recipes.push_back(parse_recipe(r));
  SweepConfig cfg;
  a.field.apply(cfg);
  a.opts.apply(cfg, run.common.threads);

  std::vector<std::string> recipe_names;
  for (const auto& r : recipes) recipe_names.push_back(to_string(r));
  run.config = {{"scene", scene_to_json(base)}, {"ks", a.ks},        {"recipes", recipe_names},
                {"seeds", a.seeds},             {"field", a.field.to_json()}, {"train", a.opts.to_json(cfg)}};

  const SweepReport report = scaling_sweep(base, recipes, a.ks, a.seeds, cfg, [](const SweepRow& row, const TrainResult&) {
    fmt::print(stderr, "{} k={} {} seed={}: init T {:.4f}, PSNR {:.2f} dB{}\n", row.scene, row.k,
               to_string(row.recipe), row.seed, row.init_mean_transmittance, row.psnr_db,
               row.diverged ? " (diverged)" : "");
  });
  run.write("sweep.csv", report.to_csv());
  std::size_t diverged = 0;
  for (const auto& row : report.rows) diverged += row.diverged ? 1 : 0;
  fmt::print("{} cells, {} diverged; wrote {}\n", report.rows.size(), diverged, run.path("sweep.csv").string());
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct StatsArgs {
  std::string scene;
  double k = 1.0;
  std::string run_dir;
  std::string compare_dir;
  std::string recipe;
  std::uint64_t seed = 0;
  FieldOptions field;
  std::size_t grid = 64;
  double percent_step = 2.0;
  std::size_t camera = 0;
  std::size_t samples = 256;
  std::size_t hist_rays = 1024;
  std::size_t bins = 20;
};

int cmd_stats(Run& run, const StatsArgs& a) {
  const int threads = run.common.threads;
  const SamplerSpec sampler{SamplerKind::Uniform, a.samples, 0, 0, Contraction::None};
  std::optional<LoadedRun> subject;
  std::string label = "oracle";
  run.config = {{"grid", a.grid}, {"percent_step", a.percent_step}, {"camera", a.camera}, {"samples", a.samples}};

  if (!a.run_dir.empty()) {
    if (!a.recipe.empty()) throw ConfigError("--recipe", "cannot be combined with --run");
    subject = load_run(a.run_dir);
    run.config["run"] = a.run_dir;
  } else {
    if (a.scene.empty()) throw ConfigError("--scene", "required unless --run is given");
    if (!a.compare_dir.empty()) throw ConfigError("--compare", "requires --run");
    const SceneSpec base = resolve_scene(a.scene);
    if (!(a.k > 0.0) || !std::isfinite(a.k)) throw DomainError(fmt::format("--k must be > 0, got {}", a.k));
    if (!a.recipe.empty()) {
      // The freshly initialized field of a sweep cell.
      SweepConfig cfg;
      a.field.apply(cfg);
      CellSetup cell = prepare_cell(base, a.k, parse_recipe(a.recipe), a.seed, cfg);
      subject = LoadedRun{cell.scene, std::move(cell.field), cell.act, a.k};
      run.config["recipe"] = a.recipe;
      run.config["seed"] = a.seed;
      run.config["field"] = a.field.to_json();
    }
    run.config["scene"] = scene_to_json(a.k == 1.0 ? base : scale_scene(base, a.k));
    run.config["k"] = a.k;
  }

  const SceneSpec scene = subject ? subject->scene : scaled_scene(a.scene, a.k);
  const double k = subject ? subject->k : a.k;
  if (a.camera >= scene.cameras.size()) throw DomainError("--camera out of range");
  if (subject) {
    label = std::string(to_string(subject->act.kind));
    run.config["activation"] = activation_json(subject->act);
  }
  const DensityFn density = subject ? field_density(subject->field, subject->act) : scene_density(scene);

  const PercentileSummary vol = volume_stats(density, scene.bounds, a.grid, a.percent_step);
  run.write(report_filename("volume", scene.name, k, label, "csv"), to_csv(vol));

  const SurfaceMap surf = subject ? surface_stats(subject->field, subject->act, scene, a.camera, sampler, threads)
                                  : surface_stats(scene, a.camera, sampler, threads);
  run.write(report_filename("surface", scene.name, k, label, "csv"), to_csv(surf));
  double hi = 0.0;
  for (std::size_t i = 0; i < surf.size(); ++i) {
    if (!surf.masked[i]) hi = std::max(hi, std::log10(std::max(surf.sigma[i], kRatioFloor)));
  }
  std::vector<double> log_sigma(surf.size());
  for (std::size_t i = 0; i < surf.size(); ++i) log_sigma[i] = std::log10(std::max(surf.sigma[i], kRatioFloor));
  run.write_ppm_file(report_filename("surface", scene.name, k, label, "ppm"),
                     colorize(log_sigma, surf.width, surf.height, std::log10(kRatioFloor), std::max(hi, 0.0),
                              surf.masked));

  if (subject) {
    const Histogram h =
        init_alpha_histogram(subject->field, subject->act, scene, sampler, a.hist_rays, a.bins, a.seed);
    run.write(report_filename("alpha_hist", scene.name, k, label, "csv"), to_csv(h));
    fmt::print("alpha mass at or above 0.5: {:.4f}\n", h.mass_at_or_above(0.5));
  }

  if (!a.compare_dir.empty()) {
    const LoadedRun other = load_run(a.compare_dir);
    if (a.camera >= other.scene.cameras.size()) throw DomainError("--camera out of range for --compare run");
    const SurfaceMap base_map = surface_stats(other.field, other.act, other.scene, a.camera, sampler, threads);
    const RatioMap ratio = density_ratio_map(surf, base_map);
    run.config["compare"] = a.compare_dir;
    run.write(report_filename("ratio", scene.name, k, label, "csv"), to_csv(ratio));
    std::vector<double> log_ratio(ratio.ratio.size());
    for (std::size_t i = 0; i < log_ratio.size(); ++i) log_ratio[i] = std::log10(ratio.ratio[i]);
    run.write_ppm_file(report_filename("ratio", scene.name, k, label, "ppm"),
                       colorize(log_ratio, ratio.width, ratio.height, -2.0, 2.0, ratio.masked));
    fmt::print("ratio map: {} clamped pixels\n", ratio.clamped_count);
  }
  fmt::print("top {}% band mean sigma: {:.6g}; empty fraction {:.4f}\n", a.percent_step, vol.top_band_mean(),
             vol.empty_fraction);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct InitSolveArgs {
  std::string kind;
  double T_prime = 0.99;
  double L = 4.0;
  double tau = 1.0;
  double mu = 0.0;
  std::uint64_t seed = 0;
  std::size_t samples = kDefaultInitSamples;
};

int cmd_init_solve(Run& run, const InitSolveArgs& a) {
  run.config = {{"kind", a.kind}, {"T_prime", a.T_prime}, {"L", a.L},         {"tau", a.tau},
                {"mu", a.mu},     {"seed", a.seed},       {"samples", a.samples}};
  const ActivationKind kind = parse_activation(a.kind);
  const InitSpec spec{a.T_prime, a.L, a.tau, a.mu};
  const ActivationConfig act = high_transmittance_activation(kind, spec, a.samples, a.seed);
  fmt::print("kind,T_prime,L,tau,offset\n{},{:g},{:g},{:g},{:.12f}\n", to_string(kind), a.T_prime, a.L, a.tau,
             act.offset);
  return kExitOk;
}

struct TableArgs {
  double L = 4.0;
  std::vector<double> alphas{0.5, 0.9, 0.99, 0.999};
  std::vector<std::size_t> samples{2, 16, 64, 256};
};

int cmd_table(Run& run, const TableArgs& a) {
  run.config = {{"L", a.L}, {"alphas", a.alphas}, {"samples", a.samples}};
  std::cout << to_csv(required_sigma_table(a.L, a.samples, a.alphas));
  return kExitOk;
}

}  // namespace
}  // namespace alphainv::tools

int main(int argc, char** argv) {
  using namespace alphainv;
  using namespace alphainv::tools;

  CLI::App app{"Scale-invariant density activations and transmittance-aware initialization for volume rendering",
               "alphainv"};
  app.require_subcommand(1);
  app.set_version_flag("--version", ALPHAINV_GIT_DESCRIBE);

  Run run;
  for (int i = 0; i < argc; ++i) run.argv.emplace_back(argv[i]);

  RenderArgs render_args;
  auto* render = app.add_subcommand("render", "Render one camera of the oracle scene or of a trained run");
  render->add_option("--scene", render_args.scene, "Bundled scene name or scene JSON path");
  render->add_option("--k", render_args.k, "Scene scale factor")->capture_default_str();
  render->add_option("--camera", render_args.camera, "Camera index")->capture_default_str();
  render->add_option("--run", render_args.run_dir, "Output directory of `alphainv train`");
  render->add_option("--samples", render_args.samples, "Uniform samples per ray for field renders")
      ->check(CLI::PositiveNumber)->capture_default_str();
  add_common(render, run.common);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train one field on one scaled scene");
  train_cmd->add_option("--scene", train_args.scene, "Bundled scene name or scene JSON path")->required();
  train_cmd->add_option("--k", train_args.k, "Scene scale factor")->capture_default_str();
  train_cmd->add_option("--activation", train_args.activation, "relu | softplus | exp | exp_gumbel")
      ->capture_default_str();
  train_cmd->add_option("--init", train_args.init, "none | high_t")->capture_default_str();
  train_cmd->add_option("--seed", train_args.seed, "Root seed")->capture_default_str();
  train_args.field.add(train_cmd);
  train_args.opts.add(train_cmd, TrainConfig{}.steps);
  add_common(train_cmd, run.common);

  SweepArgs sweep_args;
  auto* sweep = app.add_subcommand("sweep", "Scaling sweep over k x recipe x seed; writes sweep.csv");
  sweep->add_option("--scene", sweep_args.scene, "Bundled scene name or scene JSON path")->required();
  sweep->add_option("--ks", sweep_args.ks, "Scale factors")->delimiter(',')->capture_default_str();
  sweep->add_option("--recipes", sweep_args.recipes, "activation:init pairs")->delimiter(',')->capture_default_str();
  sweep->add_option("--seeds", sweep_args.seeds, "Root seeds")->delimiter(',')->capture_default_str();
  sweep_args.field.add(sweep);
  sweep_args.opts.add(sweep, kSweepSteps);
  add_common(sweep, run.common);

  StatsArgs stats_args;
  auto* stats = app.add_subcommand("stats", "Volume, surface, alpha-histogram and ratio reports");
  stats->add_option("--scene", stats_args.scene, "Bundled scene name or scene JSON path");
  stats->add_option("--k", stats_args.k, "Scene scale factor")->capture_default_str();
  stats->add_option("--run", stats_args.run_dir, "Report on the trained field in this `train` output directory");
  stats->add_option("--compare", stats_args.compare_dir, "Second run for the density ratio map (needs --run)");
  stats->add_option("--recipe", stats_args.recipe, "Report on a freshly initialized field (activation:init)");
  stats->add_option("--seed", stats_args.seed, "Seed for --recipe init and histogram rays")->capture_default_str();
  stats_args.field.add(stats);
  stats->add_option("--grid", stats_args.grid, "Volume query grid per axis")->check(CLI::Range(2, 512))
      ->capture_default_str();
  stats->add_option("--percent-step", stats_args.percent_step, "Percentile band width")->capture_default_str();
  stats->add_option("--camera", stats_args.camera, "Camera for surface maps")->capture_default_str();
  stats->add_option("--samples", stats_args.samples, "Uniform samples per ray")->check(CLI::PositiveNumber)
      ->capture_default_str();
  stats->add_option("--hist-rays", stats_args.hist_rays, "Rays for the alpha histogram")->check(CLI::PositiveNumber)
      ->capture_default_str();
  stats->add_option("--bins", stats_args.bins, "Alpha histogram bins")->check(CLI::PositiveNumber)
      ->capture_default_str();
  add_common(stats, run.common);

  InitSolveArgs init_args;
  auto* init_solve = app.add_subcommand("init-solve", "Offset for a transparent start; one CSV row on stdout");
  init_solve->add_option("--kind", init_args.kind, "relu | softplus | exp | exp_gumbel")->required();
  init_solve->add_option("--T", init_args.T_prime, "Target mean transmittance")->capture_default_str();
  init_solve->add_option("--L", init_args.L, "Ray length")->capture_default_str();
  init_solve->add_option("--tau", init_args.tau, "Std of the raw output")->capture_default_str();
  init_solve->add_option("--mu", init_args.mu, "Mean of the raw output")->capture_default_str();
  init_solve->add_option("--seed", init_args.seed, "Seed of the numeric solver")->capture_default_str();
  init_solve->add_option("--samples", init_args.samples, "Numeric solver sample count")->check(CLI::PositiveNumber)
      ->capture_default_str();
  add_common(init_solve, run.common);

  TableArgs table_args;
  auto* table = app.add_subcommand("table", "Density needed for opacity alpha at N samples; CSV on stdout");
  table->add_option("--L", table_args.L, "Ray length")->capture_default_str();
  table->add_option("--alphas", table_args.alphas, "Target opacities")->delimiter(',')->capture_default_str();
  table->add_option("--samples", table_args.samples, "Samples per ray")->delimiter(',')->capture_default_str();
  add_common(table, run.common);

  auto* selftest = app.add_subcommand("selftest", "Fast invariant suite");
  add_common(selftest, run.common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    const auto subs = app.get_subcommands();
    fmt::print(stderr, "error: {}\n\n{}", e.what(), subs.empty() ? app.help() : subs.front()->help());
    return kExitError;
  }

  CLI::App* chosen = app.get_subcommands().front();
  run.subcommand = chosen->get_name();
  int code = kExitError;
  std::string error;
  try {
    if (chosen == render) code = cmd_render(run, render_args);
    else if (chosen == train_cmd) code = cmd_train(run, train_args);
    else if (chosen == sweep) code = cmd_sweep(run, sweep_args);
    else if (chosen == stats) code = cmd_stats(run, stats_args);
    else if (chosen == init_solve) code = cmd_init_solve(run, init_args);
    else if (chosen == table) code = cmd_table(run, table_args);
    else {
      const int failures = run_selftest(std::cout, run.common.threads);
      run.config = {{"failures", failures}};
      code = failures == 0 ? kExitOk : kExitError;
    }
  } catch (const std::exception& e) {
    error = e.what();
    fmt::print(stderr, "error: {}\n", error);
    code = kExitError;
  }
  try {
    run.write_manifest(code, error);
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: cannot write manifest: {}\n", e.what());
    if (code == kExitOk) code = kExitError;
  }
  return code;
}
