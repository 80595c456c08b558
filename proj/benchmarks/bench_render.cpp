#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "alphainv/alphainv.hpp"

namespace {

using namespace alphainv;

std::vector<double> random_alphas(std::size_t n) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 0.2);
  std::vector<double> a(n);
  for (double& v : a) v = u(rng);
  return a;
}

void BM_Composite(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::vector<double> alphas = random_alphas(n);
  const std::vector<Vec3> colors(n, Vec3{0.3, 0.6, 0.9});
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = static_cast<double>(i);
  for (auto _ : state) benchmark::DoNotOptimize(composite(alphas, colors, t));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Composite)->Arg(64)->Arg(256)->Arg(1024);

void BM_CompositeBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::vector<double> alphas = random_alphas(n);
  const std::vector<Vec3> colors(n, Vec3{0.3, 0.6, 0.9});
  for (auto _ : state) benchmark::DoNotOptimize(composite_backward(alphas, colors, Vec3{1.0, 1.0, 1.0}, 0.5));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CompositeBackward)->Arg(64)->Arg(256);

void BM_AlphaDirect(benchmark::State& state) {
  const ActivationConfig act{static_cast<ActivationKind>(state.range(0)), -2.0, 0.0};
  std::vector<double> xs(4096);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n01;
  for (double& x : xs) x = n01(rng);
  for (auto _ : state) {
    double acc = 0.0;
    for (double x : xs) acc += alpha_direct(act, x, 0.0625);
    benchmark::DoNotOptimize(acc);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(xs.size()));
  state.SetLabel(std::string(to_string(act.kind)));
}
BENCHMARK(BM_AlphaDirect)->DenseRange(0, 3);

void BM_FieldQuery(benchmark::State& state) {
  const SceneSpec scene = bundled_scene("sphere");
  const auto kind = static_cast<FieldKind>(state.range(0));
  const std::vector<std::uint32_t> meta =
      kind == FieldKind::VoxelGrid ? std::vector<std::uint32_t>{32} : std::vector<std::uint32_t>{3, 32, 32, 4};
  const Field f = init_field(kind, meta, scene.bounds, 1.0, 3);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec3> pts(4096);
  for (Vec3& p : pts) p = {u(rng), u(rng), u(rng)};
  for (auto _ : state) {
    double acc = 0.0;
    for (const Vec3& p : pts) acc += f.query(p).raw_density;
    benchmark::DoNotOptimize(acc);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(pts.size()));
  state.SetLabel(std::string(to_string(kind)));
}
BENCHMARK(BM_FieldQuery)->Arg(static_cast<int>(FieldKind::VoxelGrid))->Arg(static_cast<int>(FieldKind::TinyMlp));

void BM_RayLossAndGrad(benchmark::State& state) {
  const SceneSpec scene = bundled_scene("sphere");
  const Field f = init_field(FieldKind::VoxelGrid, {32}, scene.bounds, 1.0, 4);
  const ActivationConfig act{ActivationKind::ExpGumbel, -6.0, 0.0};
  const Ray ray = scene.camera_ray(0, 32, 32);
  const RaySamples s = sample_ray(ray, {SamplerKind::Stratified, static_cast<std::size_t>(state.range(0)), 0, 5});
  std::vector<double> grad(f.num_params(), 0.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ray_loss_and_grad(f, act, ray, s, {0.5, 0.5, 0.5}, 1.0, Contraction::None, grad));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RayLossAndGrad)->Arg(64)->Arg(256);

void BM_OracleRay(benchmark::State& state) {
  const SceneSpec scene = bundled_scene("shells");
  const Ray ray = scene.camera_ray(0, 32, 32);
  for (auto _ : state) benchmark::DoNotOptimize(ground_truth_render(scene, ray));
}
BENCHMARK(BM_OracleRay);

void BM_TrainSteps(benchmark::State& state) {
  const SceneSpec scene = bundled_scene("sphere");
  const TrainingSet data = make_training_set(scene, 256);
  const Field f = init_field(FieldKind::VoxelGrid, {32}, scene.bounds, 1.0, 6);
  TrainConfig cfg;
  cfg.steps = 10;
  cfg.threads = static_cast<int>(state.range(0));
  cfg.activation = {ActivationKind::ExpGumbel, -6.0, 0.0};
  for (auto _ : state) benchmark::DoNotOptimize(train(data, f, cfg));
  state.SetItemsProcessed(state.iterations() * 10);
}
BENCHMARK(BM_TrainSteps)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_VolumeStats(benchmark::State& state) {
  const SceneSpec scene = bundled_scene("sphere");
  const auto density = scene_density(scene);
  for (auto _ : state) {
    benchmark::DoNotOptimize(volume_stats(density, scene.bounds, static_cast<std::size_t>(state.range(0))));
  }
}
BENCHMARK(BM_VolumeStats)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
