#include "selftest.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "alphainv/alphainv.hpp"

namespace alphainv::tools {

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

Outcome form_equivalences() {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ux(-8.0, 3.0), ud(-3.0, 1.0);
  double worst_gumbel = 0.0, worst_softplus = 0.0, worst_product = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double x = ux(rng), d = std::pow(10.0, ud(rng));
    const ActivationConfig gumbel{ActivationKind::ExpGumbel, 0.0, 0.0};
    worst_gumbel = std::max(worst_gumbel, std::fabs(alpha_direct(gumbel, x, d) - alpha_from_sigma(std::exp(x), d)));
    worst_softplus = std::max(worst_softplus, std::fabs(std::exp(-softplus(x)) - sigmoid(-x)));
    std::vector<double> s(8), dd(8);
    for (std::size_t j = 0; j < s.size(); ++j) {
      s[j] = std::exp(ux(rng));
      dd[j] = std::pow(10.0, ud(rng));
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) sum += s[j] * dd[j];
    worst_product = std::max(worst_product, std::fabs(transmittance_product(s, dd) - std::exp(-sum)));
  }
  const bool ok = worst_gumbel < 1e-12 && worst_softplus < 1e-12 && worst_product < 1e-12;
  return {ok, fmt::format("max err gumbel {:.2e}, softplus {:.2e}, product {:.2e}", worst_gumbel, worst_softplus,
                          worst_product)};
}

Outcome unit_ray_constants() {
  const double L = unit_mean_ray_length(0.99, 1.0);
  const double s = required_sigma(0.99, 4.0 / 64.0);
  const bool ok = std::fabs(L - 0.0061) < 1e-4 && std::fabs(s - 73.68) < 0.01;
  return {ok, fmt::format("L(mu=0, tau=1) = {:.6f}, sigma(N=64, a=0.99) = {:.4f}", L, s)};
}

Outcome oracle_invariance(int threads) {
  const SceneSpec base = bundled_scene("sphere");
  const Image ref = ground_truth_view(base, 0, kDefaultOracleResolution, threads);
  double worst = 0.0;
  for (double k : {0.1, 25.0}) {
    const Image img = ground_truth_view(scale_scene(base, k), 0, kDefaultOracleResolution, threads);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
      for (int c = 0; c < 3; ++c) worst = std::max(worst, std::fabs(img.pixels[i][c] - ref.pixels[i][c]));
    }
  }
  return {worst < 1e-9, fmt::format("sphere, k in {{0.1, 25}}: max channel diff {:.2e}", worst)};
}

Outcome relu_offset() {
  const InitSpec spec{0.99, 4.0, 1.0, 0.0};
  const double c = numeric_init_offset(ActivationKind::Relu, spec);
  // E[max(X + c, 0)], X ~ N(0, 1)
  const double phi = std::exp(-0.5 * c * c) / std::sqrt(2.0 * std::numbers::pi);
  const double cdf = 0.5 * std::erfc(-c / std::numbers::sqrt2);
  const double achieved = (c * cdf + phi) * spec.L;
  const double target = -std::log(spec.T_prime);
  const double rel = std::fabs(achieved - target) / target;
  return {rel < 1e-4, fmt::format("offset {:.6f}, relative error {:.2e}", c, rel)};
}

double loss_of(const Field& f, const ActivationConfig& act, const Ray& ray, const RaySamples& s, const Vec3& target) {
  std::vector<double> scratch(f.num_params(), 0.0);
  return ray_loss_and_grad(f, act, ray, s, target, 1.0, Contraction::None, scratch) / 3.0;
}

Outcome gradients() {
  const SceneSpec scene = bundled_scene("shells");
  double worst = 0.0;
  int checked = 0;
  for (ActivationKind kind :
       {ActivationKind::Relu, ActivationKind::Softplus, ActivationKind::Exp, ActivationKind::ExpGumbel}) {
    Field f = init_field(FieldKind::VoxelGrid, {4}, scene.bounds, 1.0, 5);
    const ActivationConfig act{kind, kind == ActivationKind::Relu ? 0.7 : -0.5, 0.0};
    const Ray ray = scene.camera_ray(0, 30, 33);
    const RaySamples s = sample_ray(ray, {SamplerKind::Stratified, 24, 0, 3}, {0, 0});
    const Vec3 target{0.2, 0.5, 0.7};
    std::vector<double> grad(f.num_params(), 0.0);
    ray_loss_and_grad(f, act, ray, s, target, 1.0 / 3.0, Contraction::None, grad);
    const double h = 1e-4;
    for (std::size_t i = 0; i < f.num_params(); ++i) {
      if (std::fabs(grad[i]) < 1e-8) continue;
      auto at = [&](double delta) {
        Field g = f;
        g.mutable_params()[i] += delta;
        return loss_of(g, act, ray, s, target);
      };
      const double fd = (8.0 * (at(h) - at(-h)) - (at(2 * h) - at(-2 * h))) / (12.0 * h);
      worst = std::max(worst, std::fabs(grad[i] - fd) / std::max(std::fabs(fd), 1e-8));
      ++checked;
    }
  }
  return {checked > 0 && worst < 1e-4, fmt::format("{} partials, max relative error {:.2e}", checked, worst)};
}

Outcome thread_determinism(int threads) {
  const SceneSpec scene = bundled_scene("sphere");
  const TrainingSet data = make_training_set(scene, 512, threads);
  const Field f = init_field(FieldKind::VoxelGrid, {12}, scene.bounds, 1.0, 3);
  TrainConfig cfg;
  cfg.steps = 20;
  cfg.threads = 1;
  const TrainResult a = train(data, f, cfg);
  cfg.threads = std::max(threads, 4);
  const TrainResult b = train(data, f, cfg);
  const bool ok = a.field == b.field;
  return {ok, fmt::format("20 steps, threads 1 vs {}: parameters {}", cfg.threads, ok ? "identical" : "differ")};
}

Outcome serialization() {
  const SceneSpec scene = bundled_scene("boxes");
  const Field f = init_field(FieldKind::TinyMlp, {3, 8, 8, 4}, scene.bounds, 1.0, 9);
  std::stringstream buf;
  write_checkpoint(f, buf);
  const bool field_ok = read_checkpoint(buf) == f;
  bool scenes_ok = true;
  for (const auto& name : bundled_scene_names()) {
    const SceneSpec s = bundled_scene(name);
    scenes_ok = scenes_ok && scene_to_json(parse_scene(scene_to_json(s))) == scene_to_json(s);
  }
  return {field_ok && scenes_ok, fmt::format("checkpoint {}, scene JSON {}", field_ok ? "ok" : "mismatch",
                                             scenes_ok ? "ok" : "mismatch")};
}

}  // namespace

int run_selftest(std::ostream& out, int threads) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> checks = {
      {"form-equivalences", form_equivalences},
      {"unit-ray-constants", unit_ray_constants},
      {"oracle-alpha-invariance", [&] { return oracle_invariance(threads); }},
      {"relu-init-offset", relu_offset},
      {"pipeline-gradients", gradients},
      {"thread-determinism", [&] { return thread_determinism(threads); }},
      {"serialization", serialization},
  };
  int failures = 0;
  for (const auto& [name, fn] : checks) {
    const auto start = std::chrono::steady_clock::now();
    Outcome r;
    try {
      r = fn();
    } catch (const std::exception& e) {
      r = {false, fmt::format("threw: {}", e.what())};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    fmt::print(out, "{} {} ({}; {:.1f} s)\n", r.ok ? "PASS" : "FAIL", name, r.detail, secs);
    failures += r.ok ? 0 : 1;
  }
  return failures;
}

}  // namespace alphainv::tools
