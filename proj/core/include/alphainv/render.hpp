#pragma once

#include <concepts>
#include <vector>

#include "alphainv/activations.hpp"
#include "alphainv/sampling.hpp"
#include "alphainv/volrend.hpp"

namespace alphainv {

/// Anything that maps a position to raw density and color logits.
template <class F>
concept RadianceField = requires(const F& f, const Vec3& p) {
  { f.query(p) } -> std::convertible_to<FieldResponse>;
};

inline Vec3 logits_to_rgb(const Vec3& logits) {
  return {sigmoid(logits.x), sigmoid(logits.y), sigmoid(logits.z)};
}

/// Position at which the field is queried for parameter t along ray.
inline Vec3 query_point(const Ray& ray, double t, Contraction contraction) {
  const Vec3 p = ray.at(t);
  return contraction == Contraction::MipNerf360 ? contract(p) : p;
}

/// Queries field at every sample, maps raw density through act and composites.
/// Colors are sigmoid(color logits).
template <RadianceField F>
RenderOutput render_ray(const F& field, const Ray& ray, const RaySamples& samples, const ActivationConfig& act,
                        Contraction contraction = Contraction::None) {
  const std::size_t n = samples.size();
  std::vector<double> alphas(n);
  std::vector<Vec3> colors(n);
  for (std::size_t i = 0; i < n; ++i) {
    const FieldResponse r = field.query(query_point(ray, samples.t_mids[i], contraction));
    alphas[i] = alpha_direct(act, r.raw_density, samples.intervals[i]);
    colors[i] = logits_to_rgb(r.color_logits);
  }
  return composite(alphas, colors, samples.t_mids);
}

}  // namespace alphainv
