#include "alphainv/scene.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "alphainv/error.hpp"

namespace alphainv {

namespace {

struct Interval {
  double t0;
  double t1;
};

// Entry/exit parameters of the ray inside a ball; empty when missed.
bool ball_hit(const Ray& ray, const Vec3& c, double r, Interval& out) {
  const Vec3 oc = ray.origin - c;
  const double b = dot(oc, ray.direction);
  const double cc = dot(oc, oc) - r * r;
  const double disc = b * b - cc;
  if (disc <= 0.0) return false;
  const double s = std::sqrt(disc);
  out = {-b - s, -b + s};
  return true;
}

bool box_hit(const Ray& ray, const Vec3& lo, const Vec3& hi, Interval& out) {
  double t0 = -INFINITY, t1 = INFINITY;
  for (int a = 0; a < 3; ++a) {
    const double o = ray.origin[a], d = ray.direction[a];
    if (d == 0.0) {
      if (o < lo[a] || o > hi[a]) return false;
      continue;
    }
    double ta = (lo[a] - o) / d, tb = (hi[a] - o) / d;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  if (!(t1 > t0)) return false;
  out = {t0, t1};
  return true;
}

// Up to two intervals (a shell splits into front and back parts).
std::vector<Interval> hit_intervals(const Ray& ray, const Geometry& g) {
  std::vector<Interval> out;
  Interval iv{};
  std::visit(
      [&](const auto& shape) {
        using T = std::decay_t<decltype(shape)>;
        if constexpr (std::is_same_v<T, Sphere>) {
          if (ball_hit(ray, shape.center, shape.radius, iv)) out.push_back(iv);
        } else if constexpr (std::is_same_v<T, Shell>) {
          Interval outer{}, inner{};
          if (!ball_hit(ray, shape.center, shape.outer_radius, outer)) return;
          if (!ball_hit(ray, shape.center, shape.inner_radius, inner)) {
            out.push_back(outer);
            return;
          }
          out.push_back({outer.t0, inner.t0});
          out.push_back({inner.t1, outer.t1});
        } else if constexpr (std::is_same_v<T, Box>) {
          if (box_hit(ray, shape.min, shape.max, iv)) out.push_back(iv);
        } else {
          const double o = dot(shape.normal, ray.origin);
          const double d = dot(shape.normal, ray.direction);
          if (d == 0.0) {
            if (o >= shape.lo && o <= shape.hi) out.push_back({-INFINITY, INFINITY});
            return;
          }
          double ta = (shape.lo - o) / d, tb = (shape.hi - o) / d;
          if (ta > tb) std::swap(ta, tb);
          out.push_back({ta, tb});
        }
      },
      g);
  return out;
}

bool inside(const Geometry& g, const Vec3& p) {
  return std::visit(
      [&](const auto& shape) -> bool {
        using T = std::decay_t<decltype(shape)>;
        if constexpr (std::is_same_v<T, Sphere>) {
          return norm(p - shape.center) <= shape.radius;
        } else if constexpr (std::is_same_v<T, Shell>) {
          const double r = norm(p - shape.center);
          return r >= shape.inner_radius && r <= shape.outer_radius;
        } else if constexpr (std::is_same_v<T, Box>) {
          return Aabb{shape.min, shape.max}.contains(p);
        } else {
          const double s = dot(shape.normal, p);
          return s >= shape.lo && s <= shape.hi;
        }
      },
      g);
}

Geometry scaled(const Geometry& g, double k) {
  return std::visit(
      [&](const auto& shape) -> Geometry {
        using T = std::decay_t<decltype(shape)>;
        if constexpr (std::is_same_v<T, Sphere>) {
          return Sphere{shape.center * k, shape.radius * k};
        } else if constexpr (std::is_same_v<T, Shell>) {
          return Shell{shape.center * k, shape.inner_radius * k, shape.outer_radius * k};
        } else if constexpr (std::is_same_v<T, Box>) {
          return Box{shape.min * k, shape.max * k};
        } else {
          return Slab{shape.normal, shape.lo * k, shape.hi * k};
        }
      },
      g);
}

void check_geometry(const Geometry& g, const std::string& path) {
  std::visit(
      [&](const auto& shape) {
        using T = std::decay_t<decltype(shape)>;
        if constexpr (std::is_same_v<T, Sphere>) {
          if (!(shape.radius > 0.0) || !std::isfinite(shape.radius)) throw ConfigError(path + ".radius", "must be > 0");
        } else if constexpr (std::is_same_v<T, Shell>) {
          if (!(shape.inner_radius > 0.0) || !(shape.outer_radius > shape.inner_radius) ||
              !std::isfinite(shape.outer_radius)) {
            throw ConfigError(path, "shell needs 0 < inner_radius < outer_radius");
          }
        } else if constexpr (std::is_same_v<T, Box>) {
          if (!Aabb{shape.min, shape.max}.non_degenerate()) throw ConfigError(path, "box needs min < max on every axis");
        } else {
          if (std::fabs(norm(shape.normal) - 1.0) > 1e-9) throw ConfigError(path + ".normal", "must have unit length");
          if (!(shape.hi > shape.lo)) throw ConfigError(path, "slab needs lo < hi");
        }
      },
      g);
}

}  // namespace

Vec3 Camera::pixel_direction(int px, int py) const {
  const Vec3 forward = normalized(look_at - position);
  const Vec3 right = normalized(cross(forward, up));
  const Vec3 cam_up = cross(right, forward);
  const double tan_half = std::tan(0.5 * fov_y_deg * std::numbers::pi / 180.0);
  const double aspect = static_cast<double>(width) / static_cast<double>(height);
  const double sx = ((px + 0.5) / width * 2.0 - 1.0) * tan_half * aspect;
  const double sy = (1.0 - (py + 0.5) / height * 2.0) * tan_half;
  return normalized(forward + sx * right + sy * cam_up);
}

void SceneSpec::validate() const {
  if (!bounds.non_degenerate()) throw ConfigError("scene.bounds", "needs positive extent on every axis");
  if (!(near > 0.0) || !std::isfinite(near)) throw ConfigError("scene.near", "must be > 0");
  if (!(far > near) || !std::isfinite(far)) throw ConfigError("scene.far", "must be greater than near");
  if (!(scale_k > 0.0) || !std::isfinite(scale_k)) throw ConfigError("scene.scale_k", "must be > 0");
  if (sampler.n_samples == 0) throw ConfigError("scene.sampler.n_samples", "must be >= 1");
  for (std::size_t i = 0; i < primitives.size(); ++i) {
    const auto path = fmt::format("scene.primitives[{}]", i);
    const Primitive& p = primitives[i];
    if (!(p.sigma >= 0.0) || !std::isfinite(p.sigma)) throw ConfigError(path + ".sigma", "must be finite and >= 0");
    for (int c = 0; c < 3; ++c) {
      if (!(p.albedo[c] >= 0.0 && p.albedo[c] <= 1.0)) throw ConfigError(path + ".albedo", "components must lie in [0,1]");
    }
    check_geometry(p.geometry, path);
  }
  for (std::size_t i = 0; i < cameras.size(); ++i) {
    const auto path = fmt::format("scene.cameras[{}]", i);
    const Camera& c = cameras[i];
    if (c.width < 1 || c.height < 1) throw ConfigError(path, "width and height must be >= 1");
    if (!(c.fov_y_deg > 0.0 && c.fov_y_deg < 180.0)) throw ConfigError(path + ".fov_y", "must lie in (0, 180)");
    const Vec3 f = c.look_at - c.position;
    if (!(norm(f) > 0.0)) throw ConfigError(path + ".look_at", "must differ from position");
    if (!(norm(cross(f, c.up)) > 0.0)) throw ConfigError(path + ".up", "must not be parallel to the view direction");
  }
}

double SceneSpec::density_at(const Vec3& p) const {
  if (!bounds.contains(p)) return 0.0;
  double s = 0.0;
  for (const Primitive& prim : primitives) {
    if (inside(prim.geometry, p)) s += prim.sigma;
  }
  return s;
}

Ray SceneSpec::camera_ray(std::size_t camera, int px, int py) const {
  const Camera& c = cameras.at(camera);
  return Ray::make(c.position, c.pixel_direction(px, py), near, far);
}

SceneSpec scale_scene(const SceneSpec& scene, double k) {
  if (!std::isfinite(k) || !(k > 0.0)) {
    throw DomainError(fmt::format("scale_scene: k must be finite and > 0, got {}", k));
  }
  SceneSpec out = scene;
  for (Primitive& p : out.primitives) {
    p.geometry = scaled(p.geometry, k);
    p.sigma = p.sigma / k;
  }
  out.bounds = scene.bounds.scaled(k);
  for (Camera& c : out.cameras) {
    c.position = c.position * k;
    c.look_at = c.look_at * k;
  }
  out.near = scene.near * k;
  out.far = scene.far * k;
  out.scale_k = scene.scale_k * k;
  return out;
}

RenderOutput ground_truth_render(const SceneSpec& scene, const Ray& ray, std::size_t resolution) {
  if (resolution < 1) throw DomainError("ground_truth_render: resolution must be >= 1");
  const double t0 = ray.t_near, t1 = ray.t_far;

  // Density is confined to the scene bounds.
  Interval clip{};
  const bool in_bounds = box_hit(ray, scene.bounds.min, scene.bounds.max, clip);

  struct Span {
    Interval iv;
    double sigma;
    Vec3 albedo;
  };
  std::vector<Span> spans;
  std::vector<double> grid;
  const double step = (t1 - t0) / static_cast<double>(resolution);
  grid.reserve(resolution + 1);
  for (std::size_t i = 0; i <= resolution; ++i) grid.push_back(t0 + step * static_cast<double>(i));
  grid.back() = t1;

  std::vector<double> edges;
  if (in_bounds) {
    for (const Primitive& p : scene.primitives) {
      if (p.sigma == 0.0) continue;
      for (Interval iv : hit_intervals(ray, p.geometry)) {
        iv.t0 = std::max({iv.t0, clip.t0, t0});
        iv.t1 = std::min({iv.t1, clip.t1, t1});
        if (!(iv.t1 > iv.t0)) continue;
        spans.push_back({iv, p.sigma, p.albedo});
        edges.push_back(iv.t0);
        edges.push_back(iv.t1);
      }
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  std::vector<double> cuts(grid.size() + edges.size());
  std::merge(grid.begin(), grid.end(), edges.begin(), edges.end(), cuts.begin());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  // Every edge is a cut, so the set of spans covering a segment only changes at
  // an edge. Density and color are summed once per gap between edges.
  std::vector<double> gap_sigma(edges.size() + 1, 0.0);
  std::vector<Vec3> gap_color(edges.size() + 1);
  for (std::size_t j = 0; j + 1 < edges.size(); ++j) {
    const double m = 0.5 * (edges[j] + edges[j + 1]);
    double sigma = 0.0;
    Vec3 weighted{};
    for (const Span& s : spans) {
      if (m > s.iv.t0 && m < s.iv.t1) {
        sigma += s.sigma;
        weighted += s.sigma * s.albedo;
      }
    }
    gap_sigma[j + 1] = sigma;
    gap_color[j + 1] = sigma > 0.0 ? weighted / sigma : Vec3{};
  }

  const std::size_t n = cuts.size() - 1;
  std::vector<double> alphas(n), t_mids(n);
  std::vector<Vec3> colors(n);
  std::size_t gap = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = cuts[i], b = cuts[i + 1];
    const double m = 0.5 * (a + b);
    while (gap < edges.size() && edges[gap] <= a) ++gap;
    const double sigma = gap_sigma[gap];
    t_mids[i] = m;
    alphas[i] = sigma > 0.0 ? alpha_from_sigma(sigma, b - a) : 0.0;
    colors[i] = gap_color[gap];
  }
  return composite(alphas, colors, t_mids);
}

std::vector<std::string> bundled_scene_names() { return {"slab", "sphere", "shells", "boxes"}; }

namespace {

std::vector<Camera> orbit_rig() {
  std::vector<Camera> cams;
  constexpr double radius = 4.0;
  for (int i = 0; i < 6; ++i) {
    const double az = i * std::numbers::pi / 3.0 + 0.3;
    const double el = (i % 2 == 0 ? 25.0 : -15.0) * std::numbers::pi / 180.0;
    Camera c;
    c.position = {radius * std::cos(el) * std::cos(az), radius * std::cos(el) * std::sin(az), radius * std::sin(el)};
    c.look_at = {0.0, 0.0, 0.0};
    c.up = {0.0, 0.0, 1.0};
    c.fov_y_deg = 40.0;
    c.width = 64;
    c.height = 64;
    cams.push_back(c);
  }
  return cams;
}

}  // namespace

SceneSpec bundled_scene(std::string_view name) {
  SceneSpec s;
  s.name = std::string(name);
  s.bounds = {{-1.5, -1.5, -1.5}, {1.5, 1.5, 1.5}};
  s.cameras = orbit_rig();
  s.near = 2.0;
  s.far = 6.0;
  s.sampler = SamplerSpec{SamplerKind::Stratified, 64, 0, 0, Contraction::None};
  if (name == "slab") {
    s.primitives = {{Slab{{0.0, 0.0, 1.0}, -0.4, 0.4}, 1.5, {0.2, 0.6, 0.9}}};
  } else if (name == "sphere") {
    s.primitives = {{Sphere{{0.0, 0.0, 0.0}, 1.0}, 50.0, {0.9, 0.5, 0.2}}};
  } else if (name == "shells") {
    s.primitives = {{Shell{{0.0, 0.0, 0.0}, 0.85, 1.0}, 4.0, {0.2, 0.5, 1.0}},
                    {Shell{{0.0, 0.0, 0.0}, 0.3, 0.5}, 8.0, {1.0, 0.8, 0.1}}};
  } else if (name == "boxes") {
    s.primitives = {{Box{{-1.1, -0.9, -0.6}, {-0.5, -0.3, 0.0}}, 100.0, {0.9, 0.2, 0.2}},
                    {Box{{-0.3, -0.2, -0.3}, {0.3, 0.4, 0.5}}, 100.0, {0.2, 0.9, 0.3}},
                    {Box{{0.5, 0.3, -0.8}, {1.1, 1.0, -0.1}}, 100.0, {0.3, 0.3, 0.95}}};
  } else {
    throw DomainError(fmt::format("unknown bundled scene '{}' (expected slab|sphere|shells|boxes)", name));
  }
  return s;
}

}  // namespace alphainv
