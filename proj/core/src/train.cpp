#include "alphainv/train.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "alphainv/error.hpp"
#include "alphainv/parallel.hpp"
#include "alphainv/random.hpp"
#include "alphainv/render.hpp"

namespace alphainv {

TrainingSet make_training_set(const SceneSpec& scene, std::size_t resolution, int threads) {
  TrainingSet data;
  for (std::size_t c = 0; c < scene.cameras.size(); ++c) {
    const Camera& cam = scene.cameras[c];
    for (int y = 0; y < cam.height; ++y) {
      for (int x = 0; x < cam.width; ++x) data.rays.push_back(scene.camera_ray(c, x, y));
    }
  }
  data.colors.resize(data.rays.size());
  data.transmittance.resize(data.rays.size());
  parallel_for(data.rays.size(), threads, [&](std::size_t i) {
    const RenderOutput out = ground_truth_render(scene, data.rays[i], resolution);
    data.colors[i] = out.color;
    data.transmittance[i] = out.final_transmittance;
  });
  return data;
}

Adam::Adam(std::size_t n, double learning_rate, AdamParams params)
    : lr_(learning_rate), p_(params), m_(n, 0.0), v_(n, 0.0) {}

void Adam::step(std::span<double> theta, std::span<const double> grad) {
  if (theta.size() != m_.size() || grad.size() != m_.size()) {
    throw DomainError("Adam::step: size mismatch");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(p_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(p_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < theta.size(); ++i) {
    m_[i] = p_.beta1 * m_[i] + (1.0 - p_.beta1) * grad[i];
    v_[i] = p_.beta2 * v_[i] + (1.0 - p_.beta2) * grad[i] * grad[i];
    const double m_hat = m_[i] / bc1;
    const double v_hat = v_[i] / bc2;
    theta[i] -= lr_ * m_hat / (std::sqrt(v_hat) + p_.eps);
  }
}

void Sgd::step(std::span<double> theta, std::span<const double> grad) const {
  if (theta.size() != grad.size()) throw DomainError("Sgd::step: size mismatch");
  for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= lr_ * grad[i];
}

void TrainConfig::validate() const {
  if (batch_rays == 0) throw DomainError("TrainConfig: batch_rays must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw DomainError("TrainConfig: learning_rate must be > 0");
  }
  if (log_every == 0) throw DomainError("TrainConfig: log_every must be >= 1");
  activation.validate();
  if (init) init->validate();
  sampler.validate(1.0);
}

ActivationConfig resolve_activation(const TrainConfig& cfg) {
  if (!cfg.init) return cfg.activation;
  return high_transmittance_activation(cfg.activation.kind, *cfg.init, kDefaultInitSamples,
                                       substream(cfg.seed, "init-offset"));
}

namespace {

struct Scratch {
  std::vector<Vec3> points;
  std::vector<double> raw;
  std::vector<double> alphas;
  std::vector<double> dadx;
  std::vector<Vec3> rgb;
  std::vector<double> prefix;
};

double ray_loss_and_grad_impl(const Field& field, const ActivationConfig& act, const Ray& ray,
                              const RaySamples& s, const Vec3& target, double loss_scale, Contraction contraction,
                              std::span<double> grad, Scratch& w) {
  const std::size_t n = s.size();
  w.points.resize(n);
  w.raw.resize(n);
  w.alphas.resize(n);
  w.dadx.resize(n);
  w.rgb.resize(n);
  w.prefix.resize(n);

  // Forward.
  Vec3 color{};
  double transmittance = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 p = query_point(ray, s.t_mids[i], contraction);
    const FieldResponse r = field.query(p);
    const double a_raw = alpha_direct(act, r.raw_density, s.intervals[i]);
    const double a = clamp_alpha(a_raw);
    w.points[i] = p;
    w.raw[i] = r.raw_density;
    w.alphas[i] = a;
    w.dadx[i] = (a_raw == a) ? dalpha_dx(act, r.raw_density, s.intervals[i]) : 0.0;
    w.rgb[i] = logits_to_rgb(r.color_logits);
    w.prefix[i] = transmittance;
    color += (transmittance * a) * w.rgb[i];
    transmittance *= (1.0 - a);
  }
  const Vec3 err = color - target;
  const double sq = dot(err, err);
  if (grad.empty()) return sq;

  // Backward: dL/dcolor = 2 err * loss_scale.
  const Vec3 d_color = (2.0 * loss_scale) * err;
  Vec3 behind{};
  for (std::size_t i = n; i-- > 0;) {
    const double a = w.alphas[i];
    const Vec3& c = w.rgb[i];
    if (w.raw[i] != -INFINITY) {
      const double d_alpha = w.prefix[i] * dot(c - behind, d_color);
      const double d_raw = d_alpha * w.dadx[i];
      const double wi = w.prefix[i] * a;
      const Vec3 d_logits{wi * d_color.x * c.x * (1.0 - c.x), wi * d_color.y * c.y * (1.0 - c.y),
                          wi * d_color.z * c.z * (1.0 - c.z)};
      field.backward(w.points[i], d_raw, d_logits, grad);
    }
    behind = a * c + (1.0 - a) * behind;
  }
  return sq;
}

}  // namespace

double ray_loss_and_grad(const Field& field, const ActivationConfig& act, const Ray& ray, const RaySamples& samples,
                         const Vec3& target, double loss_scale, Contraction contraction, std::span<double> grad) {
  Scratch w;
  return ray_loss_and_grad_impl(field, act, ray, samples, target, loss_scale, contraction, grad, w);
}

TrainResult train(const TrainingSet& data, Field field, const TrainConfig& cfg) {
  cfg.validate();
  if (data.rays.empty()) throw DomainError("train: empty training set");
  const ActivationConfig act = resolve_activation(cfg);

  TrainResult result{field, act, {}, false};
  if (cfg.steps == 0) return result;

  const std::size_t n_params = field.num_params();
  const std::size_t batch = cfg.batch_rays;
  const CounterRng batch_rng(substream(cfg.seed, "batch"));
  SamplerSpec sampler = cfg.sampler;
  sampler.seed = substream(cfg.seed, "sampler");

  std::vector<std::vector<double>> chunk_grad(kGradientChunks, std::vector<double>(n_params, 0.0));
  std::vector<double> chunk_loss(kGradientChunks, 0.0);
  std::vector<Scratch> scratch(kGradientChunks);
  std::vector<double> grad(n_params, 0.0);
  std::vector<std::size_t> batch_idx(batch);

  Adam adam(n_params, cfg.learning_rate, cfg.adam);
  const Sgd sgd(cfg.learning_rate);
  const double loss_scale = 1.0 / (3.0 * static_cast<double>(batch));
  const int threads = std::max(cfg.threads, 1);

  for (std::size_t step = 0; step < cfg.steps; ++step) {
    for (std::size_t j = 0; j < batch; ++j) batch_idx[j] = batch_rng.bits(step, j) % data.rays.size();

    parallel_for(kGradientChunks, threads, [&](std::size_t c) {
      auto& g = chunk_grad[c];
      std::fill(g.begin(), g.end(), 0.0);
      double loss = 0.0;
      const std::size_t lo = c * batch / kGradientChunks;
      const std::size_t hi = (c + 1) * batch / kGradientChunks;
      for (std::size_t j = lo; j < hi; ++j) {
        const std::size_t r = batch_idx[j];
        const Ray& ray = data.rays[r];
        const RaySamples s = sample_ray(ray, sampler, {r, step});
        loss += ray_loss_and_grad_impl(field, act, ray, s, data.colors[r], loss_scale, sampler.contraction, g,
                                       scratch[c]);
      }
      chunk_loss[c] = loss;
    });

    double loss = 0.0;
    for (double l : chunk_loss) loss += l;
    loss *= loss_scale;

    if (!std::isfinite(loss)) {
      result.loss_curve.push_back({step, loss});
      result.diverged = true;
      break;
    }
    if (step % cfg.log_every == 0 || step + 1 == cfg.steps) result.loss_curve.push_back({step, loss});

    // Parameter-index blocks are independent; each sums chunks in fixed order.
    constexpr std::size_t kBlock = 4096;
    const std::size_t blocks = (n_params + kBlock - 1) / kBlock;
    parallel_for(blocks, threads, [&](std::size_t b) {
      const std::size_t lo = b * kBlock, hi = std::min(n_params, lo + kBlock);
      for (std::size_t i = lo; i < hi; ++i) {
        double acc = 0.0;
        for (std::size_t c = 0; c < kGradientChunks; ++c) acc += chunk_grad[c][i];
        grad[i] = acc;
      }
    });

    if (cfg.optimizer == OptimizerKind::Adam) {
      adam.step(field.mutable_params(), grad);
    } else {
      sgd.step(field.mutable_params(), grad);
    }
  }
  result.field = std::move(field);
  return result;
}

Rendered render_rays(const Field& field, const ActivationConfig& act, std::span<const Ray> rays,
                     const SamplerSpec& sampler, int threads) {
  Rendered out;
  out.colors.resize(rays.size());
  out.transmittance.resize(rays.size());
  out.depth.resize(rays.size());
  parallel_for(rays.size(), threads, [&](std::size_t i) {
    const RaySamples s = sample_ray(rays[i], sampler, {i, 0});
    const RenderOutput r = render_ray(field, rays[i], s, act, sampler.contraction);
    out.colors[i] = r.color;
    out.transmittance[i] = r.final_transmittance;
    out.depth[i] = r.depth;
  });
  return out;
}

Image render_view(const Field& field, const ActivationConfig& act, const SceneSpec& scene, std::size_t camera,
                  const SamplerSpec& sampler, int threads) {
  const Camera& cam = scene.cameras.at(camera);
  std::vector<Ray> rays;
  rays.reserve(cam.pixel_count());
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) rays.push_back(scene.camera_ray(camera, x, y));
  }
  Image img(cam.width, cam.height);
  img.pixels = render_rays(field, act, rays, sampler, threads).colors;
  return img;
}

Image ground_truth_view(const SceneSpec& scene, std::size_t camera, std::size_t resolution, int threads) {
  const Camera& cam = scene.cameras.at(camera);
  Image img(cam.width, cam.height);
  parallel_for(img.pixels.size(), threads, [&](std::size_t i) {
    const int x = static_cast<int>(i % static_cast<std::size_t>(cam.width));
    const int y = static_cast<int>(i / static_cast<std::size_t>(cam.width));
    img.pixels[i] = ground_truth_render(scene, scene.camera_ray(camera, x, y), resolution).color;
  });
  return img;
}

double evaluate_psnr(const Field& field, const ActivationConfig& act, const TrainingSet& data, std::size_t n_samples,
                     Contraction contraction, int threads) {
  const SamplerSpec uniform{SamplerKind::Uniform, n_samples, 0, 0, contraction};
  const Rendered r = render_rays(field, act, data.rays, uniform, threads);
  for (const Vec3& c : r.colors) {
    if (!is_finite(c)) return -INFINITY;
  }
  return psnr(r.colors, data.colors);
}

std::string_view to_string(InitMode mode) { return mode == InitMode::HighT ? "high_t" : "none"; }

Recipe parse_recipe(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw DomainError(fmt::format("recipe '{}' must look like <activation>:<none|high_t>", text));
  }
  Recipe r;
  r.activation = parse_activation(text.substr(0, colon));
  const auto mode = text.substr(colon + 1);
  if (mode == "none") {
    r.init = InitMode::None;
  } else if (mode == "high_t") {
    r.init = InitMode::HighT;
  } else {
    throw DomainError(fmt::format("recipe '{}': init mode must be none or high_t", text));
  }
  return r;
}

std::string to_string(const Recipe& r) { return fmt::format("{}:{}", to_string(r.activation), to_string(r.init)); }

std::string SweepReport::to_csv() const {
  std::string out = "scene,k,activation,init,seed,psnr_db,init_mean_transmittance,final_loss,offset,diverged\n";
  for (const SweepRow& r : rows) {
    out += fmt::format("{},{},{},{},{},{:.6f},{:.6f},{:.9g},{:.9g},{}\n", r.scene, r.k, to_string(r.recipe.activation),
                       to_string(r.recipe.init), r.seed, r.psnr_db, r.init_mean_transmittance, r.final_loss, r.offset,
                       r.diverged ? 1 : 0);
  }
  return out;
}

std::string loss_curve_csv(std::span<const LossRecord> curve) {
  std::string out = "step,loss\n";
  for (const LossRecord& r : curve) out += fmt::format("{},{:.9g}\n", r.step, r.loss);
  return out;
}

CellSetup prepare_cell(const SceneSpec& base, double k, const Recipe& recipe, std::uint64_t seed,
                       const SweepConfig& cfg) {
  CellSetup cell{k == 1.0 ? base : scale_scene(base, k),
                 Field(FieldKind::Constant, {}, Aabb{{0, 0, 0}, {1, 1, 1}}, {0, 0, 0, 0}),
                 ActivationConfig{},
                 0.0};
  cell.L = cell.scene.longest_ray();
  cell.field = init_field(cfg.field_kind, cfg.field_metadata, cell.scene.bounds, cfg.field_tau,
                          substream(seed, "field-init"));
  cell.act.kind = recipe.activation;
  cell.act.log_L = std::log(cell.L);
  if (recipe.init == InitMode::HighT) {
    const RawStats st = measure_raw_stats(cell.field, 100000, substream(seed, "tau"));
    const InitSpec spec{cfg.T_prime, cell.L, st.stddev, st.mean};
    cell.act = high_transmittance_activation(recipe.activation, spec, cfg.init_samples, substream(seed, "init-offset"));
  }
  return cell;
}

SweepReport scaling_sweep(const SceneSpec& base, std::span<const Recipe> recipes, std::span<const double> ks,
                          std::span<const std::uint64_t> seeds, const SweepConfig& cfg, const SweepCallback& on_cell) {
  if (recipes.empty() || ks.empty() || seeds.empty()) {
    throw DomainError("scaling_sweep: recipes, ks and seeds must be non-empty");
  }
  const int threads = std::max(cfg.train.threads, 1);
  SweepReport report;
  for (double k : ks) {
    if (!(k > 0.0) || !std::isfinite(k)) throw DomainError(fmt::format("scaling_sweep: bad k {}", k));
    const SceneSpec scaled = k == 1.0 ? base : scale_scene(base, k);
    const TrainingSet data = make_training_set(scaled, cfg.oracle_resolution, threads);
    for (const Recipe& recipe : recipes) {
      for (std::uint64_t seed : seeds) {
        CellSetup cell = prepare_cell(base, k, recipe, seed, cfg);
        const SamplerSpec eval{SamplerKind::Uniform, cfg.train.sampler.n_samples, 0, 0, cfg.train.sampler.contraction};
        const Rendered init_render = render_rays(cell.field, cell.act, data.rays, eval, threads);
        double mean_t = 0.0;
        for (double t : init_render.transmittance) mean_t += t;
        mean_t /= static_cast<double>(init_render.transmittance.size());

        TrainConfig tc = cfg.train;
        tc.activation = cell.act;
        tc.init.reset();
        tc.seed = seed;
        TrainResult trained = train(data, std::move(cell.field), tc);

        SweepRow row;
        row.scene = base.name;
        row.k = k;
        row.recipe = recipe;
        row.seed = seed;
        row.init_mean_transmittance = mean_t;
        row.offset = cell.act.offset;
        row.final_loss = trained.loss_curve.empty() ? 0.0 : trained.loss_curve.back().loss;
        row.psnr_db = trained.diverged ? -INFINITY
                                       : evaluate_psnr(trained.field, trained.activation, data,
                                                       cfg.train.sampler.n_samples, cfg.train.sampler.contraction,
                                                       threads);
        row.diverged = trained.diverged || !std::isfinite(row.psnr_db) || row.psnr_db < kDivergedPsnr;
        if (!std::isfinite(row.psnr_db)) row.psnr_db = 0.0;
        if (on_cell) on_cell(row, trained);
        report.rows.push_back(std::move(row));
      }
    }
  }
  return report;
}

}  // namespace alphainv
