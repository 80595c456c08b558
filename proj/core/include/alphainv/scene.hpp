#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "alphainv/aabb.hpp"
#include "alphainv/sampling.hpp"
#include "alphainv/volrend.hpp"

namespace alphainv {

struct Sphere {
  Vec3 center;
  double radius = 1.0;
};

/// Region between two concentric spheres.
struct Shell {
  Vec3 center;
  double inner_radius = 0.5;
  double outer_radius = 1.0;
};

struct Box {
  Vec3 min;
  Vec3 max;
};

/// Region lo <= dot(normal, p) <= hi (normal has unit length).
struct Slab {
  Vec3 normal{0.0, 0.0, 1.0};
  double lo = -0.5;
  double hi = 0.5;
};

using Geometry = std::variant<Sphere, Shell, Box, Slab>;

/// Homogeneous analytic solid. Overlapping primitives add their densities.
struct Primitive {
  Geometry geometry;
  double sigma = 1.0;  // scene units^-1
  Vec3 albedo{1.0, 1.0, 1.0};
};

/// Pinhole camera. Rays leave from position through pixel centers.
struct Camera {
  Vec3 position{0.0, -4.0, 0.0};
  Vec3 look_at{};
  Vec3 up{0.0, 0.0, 1.0};
  double fov_y_deg = 40.0;
  int width = 64;
  int height = 64;

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
  /// Unit direction through the center of pixel (px, py); py = 0 is the top row.
  Vec3 pixel_direction(int px, int py) const;
};

/// Analytic scene plus camera rig. Geometry is stored already multiplied by
/// scale_k; scale_k records the accumulated factor relative to the base scene.
struct SceneSpec {
  std::string name;
  std::vector<Primitive> primitives;
  Aabb bounds;
  std::vector<Camera> cameras;
  double near = 2.0;
  double far = 6.0;
  double scale_k = 1.0;
  SamplerSpec sampler;

  /// Throws ConfigError (path "scene.<field>") on invalid contents.
  void validate() const;

  /// Longest camera ray length; every camera ray spans [near, far].
  double longest_ray() const { return far - near; }

  /// Analytic density at p (zero outside bounds).
  double density_at(const Vec3& p) const;

  Ray camera_ray(std::size_t camera, int px, int py) const;
};

/// Positions, extents, camera centers/targets, near/far multiplied by k;
/// densities divided by k; intrinsics unchanged.
SceneSpec scale_scene(const SceneSpec& scene, double k);

inline constexpr std::size_t kDefaultOracleResolution = 2048;

/// Oracle render of the analytic densities: the ray is cut at every primitive
/// boundary and on a uniform grid of `resolution` cells, so each segment has exactly
/// constant density. Background is black.
RenderOutput ground_truth_render(const SceneSpec& scene, const Ray& ray,
                                 std::size_t resolution = kDefaultOracleResolution);

/// "slab", "sphere", "shells", "boxes"
std::vector<std::string> bundled_scene_names();
SceneSpec bundled_scene(std::string_view name);

}  // namespace alphainv
