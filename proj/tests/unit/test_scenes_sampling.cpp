#include <doctest.h>

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include <alphainv/error.hpp>
#include <alphainv/render.hpp>
#include <alphainv/sampling.hpp>
#include <alphainv/scene.hpp>
#include <alphainv/scene_io.hpp>

using namespace alphainv;
using nlohmann::json;

namespace {

SceneSpec slab_scene(double sigma, double thickness) {
  SceneSpec s;
  s.name = "test-slab";
  s.bounds = {{-2, -2, -2}, {2, 2, 2}};
  s.primitives = {{Slab{{0, 0, 1}, -0.5 * thickness, 0.5 * thickness}, sigma, {1, 1, 1}}};
  s.cameras = {Camera{}};
  return s;
}

double interval_sum(const RaySamples& s) {
  double acc = 0.0;
  for (double d : s.intervals) acc += d;
  return acc;
}

bool strictly_increasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] > v[i - 1])) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE("scenes_and_sampling") {

TEST_CASE("oracle: ray missing everything is background") {
  const SceneSpec s = bundled_scene("sphere");
  const Ray ray = Ray::make({0, -4, 3}, {0, 1, 0}, 2.0, 6.0);
  const RenderOutput out = ground_truth_render(s, ray);
  CHECK(out.color == Vec3{});
  CHECK(out.final_transmittance == 1.0);
}

TEST_CASE("oracle: homogeneous slab transmittance") {
  const SceneSpec s = slab_scene(1.0, 1.0);
  const Ray ray = Ray::make({0.1, 0.2, -1.9}, {0, 0, 1}, 0.0, 3.8);
  CHECK(std::fabs(ground_truth_render(s, ray).final_transmittance - std::exp(-1.0)) < 1e-6);
  const Ray slanted = Ray::make({0, 0, -1.5}, {0, 0.6, 0.8}, 0.0, 3.0);
  CHECK(std::fabs(ground_truth_render(s, slanted).final_transmittance - std::exp(-1.0 / 0.8)) < 1e-6);
}

TEST_CASE("oracle: densities add and are clipped to the bounds") {
  SceneSpec s = slab_scene(1.0, 1.0);
  s.primitives.push_back({Sphere{{0, 0, 0}, 0.25}, 2.0, {1, 1, 1}});
  CHECK(s.density_at({0, 0, 0}) == 3.0);
  CHECK(s.density_at({1.9, 1.9, 0}) == 1.0);
  CHECK(s.density_at({2.1, 0, 0}) == 0.0);
}

TEST_CASE("scale_scene identity and group property") {
  const SceneSpec s = bundled_scene("boxes");
  const SceneSpec same = scale_scene(s, 1.0);
  CHECK(same.near == s.near);
  CHECK(same.bounds == s.bounds);
  const SceneSpec back = scale_scene(scale_scene(s, 10.0), 0.1);
  CHECK(std::fabs(back.near - s.near) < 1e-12);
  CHECK(std::fabs(back.far - s.far) < 1e-12);
  CHECK(max_abs_diff(back.bounds.max, s.bounds.max) < 1e-12);
  CHECK(max_abs_diff(back.cameras[2].position, s.cameras[2].position) < 1e-12);
  CHECK(std::fabs(back.primitives[1].sigma - s.primitives[1].sigma) < 1e-12);
  const Box& b0 = std::get<Box>(s.primitives[0].geometry);
  const Box& b1 = std::get<Box>(back.primitives[0].geometry);
  CHECK(max_abs_diff(b0.min, b1.min) < 1e-12);
  CHECK(std::fabs(back.scale_k - 1.0) < 1e-12);
  const SceneSpec up = scale_scene(s, 10.0);
  CHECK(up.cameras[0].fov_y_deg == s.cameras[0].fov_y_deg);
  CHECK(up.cameras[0].width == s.cameras[0].width);
  CHECK(up.sampler.n_samples == s.sampler.n_samples);
  CHECK_THROWS_AS(scale_scene(s, 0.0), DomainError);
}

TEST_CASE("oracle renders are invariant under scene scaling") {
  for (const std::string& name : bundled_scene_names()) {
    const SceneSpec base = bundled_scene(name);
    for (double k : {0.1, 10.0}) {
      const SceneSpec scaled = scale_scene(base, k);
      for (std::size_t cam = 0; cam < base.cameras.size(); cam += 2) {
        for (int p = 0; p < 64; p += 7) {
          const RenderOutput a = ground_truth_render(base, base.camera_ray(cam, p, 63 - p));
          const RenderOutput b = ground_truth_render(scaled, scaled.camera_ray(cam, p, 63 - p));
          CHECK(max_abs_diff(a.color, b.color) <= 1e-9);
          CHECK(std::fabs(a.final_transmittance - b.final_transmittance) <= 1e-9);
        }
      }
    }
  }
}

TEST_CASE("bundled scenes are non-trivial") {
  for (const std::string& name : bundled_scene_names()) {
    const SceneSpec s = bundled_scene(name);
    CHECK_NOTHROW(s.validate());
    CHECK(s.longest_ray() == 4.0);
    double min_T = 1.0;
    for (int p = 0; p < 64; p += 4) min_T = std::min(min_T, ground_truth_render(s, s.camera_ray(0, p, p)).final_transmittance);
    CHECK(min_T < 0.9);
  }
  CHECK_THROWS_AS(bundled_scene("teapot"), DomainError);
}

TEST_CASE("camera centre pixel looks at the target") {
  Camera c;
  c.position = {0, -4, 0};
  c.width = 65;
  c.height = 65;
  const Vec3 d = c.pixel_direction(32, 32);
  CHECK(max_abs_diff(d, Vec3{0, 1, 0}) < 1e-12);
  CHECK(c.pixel_direction(32, 0).z > 0.0);
  CHECK(c.pixel_direction(64, 32).x > 0.0);
}

TEST_CASE("uniform sampler") {
  const Ray ray = Ray::make({0, 0, 0}, {1, 0, 0}, 0.0, 4.0);
  const RaySamples s = sample_ray(ray, {SamplerKind::Uniform, 4});
  CHECK(s.intervals == std::vector<double>{1, 1, 1, 1});
  CHECK(s.t_mids == std::vector<double>{0.5, 1.5, 2.5, 3.5});
}

TEST_CASE("disparity sampler") {
  const Ray ray = Ray::make({0, 0, 0}, {1, 0, 0}, 1.0, 4.0);
  const RaySamples s = sample_ray(ray, {SamplerKind::Disparity, 3});
  const double b[] = {1.0, 4.0 / 3.0, 2.0, 4.0};
  for (int i = 0; i < 3; ++i) {
    CHECK(s.intervals[i] == doctest::Approx(b[i + 1] - b[i]).epsilon(1e-14));
    CHECK(s.t_mids[i] == doctest::Approx(0.5 * (b[i] + b[i + 1])).epsilon(1e-14));
  }
  const Ray zero_near = Ray::make({0, 0, 0}, {1, 0, 0}, 0.0, 4.0);
  CHECK_THROWS_AS(sample_ray(zero_near, {SamplerKind::Disparity, 3}), DomainError);
}

TEST_CASE("stratified sampler: one jittered sample per bin, keyed by ray and epoch") {
  const Ray ray = Ray::make({0, 0, 0}, {0, 0, 1}, 2.0, 6.0);
  const SamplerSpec spec{SamplerKind::Stratified, 16, 0, 42};
  const RaySamples a = sample_ray(ray, spec, {3, 0});
  const RaySamples b = sample_ray(ray, spec, {3, 0});
  const RaySamples c = sample_ray(ray, spec, {3, 1});
  const RaySamples d = sample_ray(ray, spec, {4, 0});
  CHECK(a.t_mids == b.t_mids);
  CHECK(a.t_mids != c.t_mids);
  CHECK(a.t_mids != d.t_mids);
  for (std::size_t i = 0; i < 16; ++i) {
    CHECK(a.t_mids[i] >= 2.0 + 0.25 * i);
    CHECK(a.t_mids[i] <= 2.0 + 0.25 * (i + 1));
  }
}

TEST_CASE("every sampler partitions the ray") {
  const Ray ray = Ray::make({0.1, -3, 0.2}, {0, 1, 0.05}, 1.5, 6.5);
  std::vector<double> coarse(32);
  for (std::size_t i = 0; i < coarse.size(); ++i) coarse[i] = std::exp(-0.05 * (double(i) - 10) * (double(i) - 10));
  for (SamplerKind kind : {SamplerKind::Uniform, SamplerKind::Stratified, SamplerKind::Disparity, SamplerKind::Importance}) {
    for (std::uint64_t id = 0; id < 20; ++id) {
      const SamplerSpec spec{kind, 32, kind == SamplerKind::Importance ? 48u : 0u, 7};
      const RaySamples s = sample_ray(ray, spec, {id, 0}, coarse);
      CHECK(std::fabs(interval_sum(s) - ray.length()) < 1e-9);
      CHECK(strictly_increasing(s.t_mids));
      for (double d : s.intervals) CHECK(d > 0.0);
      CHECK_NOTHROW(s.validate());
    }
  }
}

TEST_CASE("importance sampling concentrates where the weights are") {
  const Ray ray = Ray::make({0, 0, 0}, {1, 0, 0}, 0.0, 8.0);
  std::vector<double> w(8, 0.0);
  w[5] = 1.0;
  const SamplerSpec spec{SamplerKind::Importance, 8, 64, 9};
  const RaySamples s = sample_ray(ray, spec, {0, 0}, w);
  std::size_t in_bin = 0;
  for (double t : s.t_mids) in_bin += (t >= 5.0 && t <= 6.0) ? 1 : 0;
  // One coarse midpoint lies in the bin; the rest are new draws.
  CHECK(static_cast<double>(in_bin - 1) >= 0.9 * 64.0);
}

TEST_CASE("importance sampling falls back to uniform on zero weights") {
  const Ray ray = Ray::make({0, 0, 0}, {1, 0, 0}, 0.0, 4.0);
  const std::vector<double> w(4, 0.0);
  const RaySamples s = sample_ray(ray, {SamplerKind::Importance, 4, 4, 0}, {}, w);
  CHECK(s.size() == 8);
  for (double d : s.intervals) CHECK(d == doctest::Approx(0.5));
  CHECK_THROWS_AS(sample_ray(ray, {SamplerKind::Importance, 4, 4, 0}, {}, std::vector<double>(3, 1.0)), DomainError);
}

TEST_CASE("importance resampling keeps weights normalized") {
  const SceneSpec s = bundled_scene("shells");
  const Ray ray = s.camera_ray(1, 30, 33);
  const SamplerSpec coarse_spec{SamplerKind::Uniform, 32};
  const RaySamples coarse = sample_ray(ray, coarse_spec);
  std::vector<double> alphas(coarse.size());
  std::vector<Vec3> colors(coarse.size(), Vec3{1, 1, 1});
  for (std::size_t i = 0; i < coarse.size(); ++i) {
    alphas[i] = alpha_from_sigma(s.density_at(ray.at(coarse.t_mids[i])), coarse.intervals[i]);
  }
  const RenderOutput c = composite(alphas, colors, coarse.t_mids);
  const RaySamples fine = sample_ray(ray, {SamplerKind::Importance, 32, 64, 1}, {0, 0}, c.weights);
  std::vector<double> fa(fine.size());
  std::vector<Vec3> fc(fine.size(), Vec3{1, 1, 1});
  for (std::size_t i = 0; i < fine.size(); ++i) fa[i] = alpha_from_sigma(s.density_at(ray.at(fine.t_mids[i])), fine.intervals[i]);
  const RenderOutput f = composite(fa, fc, fine.t_mids);
  double sum = f.final_transmittance;
  for (double w : f.weights) sum += w;
  CHECK(std::fabs(sum - 1.0) < 1e-9);
}

TEST_CASE("contraction") {
  CHECK(contract({0.5, 0, 0}) == Vec3{0.5, 0, 0});
  CHECK(max_abs_diff(contract({3, 0, 0}), Vec3{5.0 / 3.0, 0, 0}) < 1e-15);
  const Vec3 far = contract({1e6, 0, 0});
  CHECK(norm(far) == doctest::Approx(2.0 - 1e-6).epsilon(1e-12));
  CHECK(norm(far) < 2.0);
  const Vec3 dir = normalized(Vec3{1, -2, 0.5});
  CHECK(max_abs_diff(contract((1.0 - 1e-9) * dir), contract((1.0 + 1e-9) * dir)) < 1e-8);
  CHECK(norm(contract(1e300 * dir)) <= 2.0);
}

TEST_CASE("scene JSON round trip") {
  for (const std::string& name : bundled_scene_names()) {
    const SceneSpec s = bundled_scene(name);
    const SceneSpec back = parse_scene(scene_to_json(s));
    CHECK(scene_to_json(back) == scene_to_json(s));
  }
  const SceneSpec scaled = scale_scene(bundled_scene("sphere"), 10.0);
  const SceneSpec back = parse_scene(scene_to_json(scaled));
  CHECK(back.far == doctest::Approx(60.0));
  CHECK(back.primitives[0].sigma == doctest::Approx(5.0));
}

TEST_CASE("shipped scene files match the bundled scenes") {
  for (const std::string& name : bundled_scene_names()) {
    const std::string path = std::string(ALPHAINV_SOURCE_DIR) + "/scenes/" + name + ".json";
    const SceneSpec loaded = load_scene(path);
    CHECK(scene_to_json(loaded) == scene_to_json(bundled_scene(name)));
    CHECK(scene_to_json(resolve_scene(path)) == scene_to_json(resolve_scene(name)));
  }
}

TEST_CASE("scene validation reports the offending path") {
  json doc = scene_to_json(bundled_scene("shells"));
  auto expect_path = [](const json& d, const std::string& path) {
    try {
      parse_scene(d);
      FAIL("expected ConfigError for " << path);
    } catch (const ConfigError& e) {
      CHECK(e.path() == path);
    }
  };
  json missing = doc;
  missing["primitives"][1].erase("outer_radius");
  expect_path(missing, "scene.primitives[1].outer_radius");
  json extra = doc;
  extra["cameras"][0]["focal"] = 1.0;
  expect_path(extra, "scene.cameras[0].focal");
  json bad_sigma = doc;
  bad_sigma["primitives"][0]["sigma"] = -1.0;
  expect_path(bad_sigma, "scene.primitives[0].sigma");
  json bad_shape = doc;
  bad_shape["primitives"][0]["shape"] = "torus";
  expect_path(bad_shape, "scene.primitives[0].shape");
  json bad_sampler = doc;
  bad_sampler["sampler"]["n_samples"] = 0;
  expect_path(bad_sampler, "scene.sampler.n_samples");
  json disparity = doc;
  disparity["near"] = 0.0;
  disparity["sampler"]["kind"] = "disparity";
  CHECK_THROWS_AS(parse_scene(disparity), ConfigError);
  json inverted = doc;
  inverted["far"] = 1.0;
  CHECK_THROWS_AS(parse_scene(inverted), ConfigError);
  CHECK_THROWS_AS(load_scene("/nonexistent/scene.json"), ConfigError);
}

TEST_CASE("scale_k in a document scales the base scene") {
  json doc = scene_to_json(bundled_scene("slab"));
  doc["scale_k"] = 25.0;
  const SceneSpec s = parse_scene(doc);
  CHECK(s.scale_k == 25.0);
  CHECK(s.near == doctest::Approx(50.0));
  CHECK(s.primitives[0].sigma == doctest::Approx(1.5 / 25.0));
}

}
