#pragma once

#include <span>
#include <vector>

#include "alphainv/vec3.hpp"

namespace alphainv {

/// Largest alpha admitted into the transmittance product. Keeps (1 - alpha) > 0
/// so that an opaque segment never zeroes the gradient of everything behind it.
inline constexpr double kMaxAlpha = 1.0 - 1e-15;

/// A ray z(t) = origin + t * direction restricted to [t_near, t_far].
struct Ray {
  Vec3 origin;
  Vec3 direction;  // unit norm
  double t_near = 0.0;
  double t_far = 1.0;

  /// Validates and returns a ray; the direction is normalized here.
  static Ray make(const Vec3& origin, const Vec3& direction, double t_near, double t_far);

  Vec3 at(double t) const { return origin + t * direction; }
  double length() const { return t_far - t_near; }
};

/// Sample parameters t_i and the lengths d_i of the segments they represent.
struct RaySamples {
  std::vector<double> t_mids;
  std::vector<double> intervals;

  std::size_t size() const { return t_mids.size(); }

  /// Throws DomainError unless t_mids is strictly increasing and every d_i > 0.
  void validate() const;
};

struct RenderOutput {
  Vec3 color;
  double depth = 0.0;
  std::vector<double> weights;
  std::vector<double> alphas;
  double final_transmittance = 1.0;
};

/// Raw (pre-activation) output of a density+color field at one point.
/// raw_density == -inf means "outside the field", i.e. sigma = 0.
struct FieldResponse {
  double raw_density = 0.0;
  Vec3 color_logits;
};

/// alpha = 1 - exp(-sigma * d).
double alpha_from_sigma(double sigma, double d);

/// Clamps alpha into [0, kMaxAlpha].
double clamp_alpha(double alpha);

/// Front-to-back alpha compositing. colors and t_mids must match alphas in length.
/// Alphas are clamped with clamp_alpha before use and stored clamped in the output.
RenderOutput composite(std::span<const double> alphas, std::span<const Vec3> colors,
                       std::span<const double> t_mids);

/// Gradients of a scalar loss w.r.t. the composite inputs.
struct CompositeGrad {
  std::vector<double> d_alpha;
  std::vector<Vec3> d_color;
};

/// Analytic backward pass of composite() for upstream dL/dcolor and dL/dT.
/// Entries whose alpha was clamped receive zero alpha-gradient.
CompositeGrad composite_backward(std::span<const double> alphas, std::span<const Vec3> colors,
                                 const Vec3& d_color, double d_final_transmittance);

/// exp(-sum_i exp(sigma_log_i + log d_i)), evaluated without forming sigma_i * d_i.
double transmittance_log_space(std::span<const double> sigma_log, std::span<const double> d);

/// prod_i (1 - alpha_i) for alpha_i = 1 - exp(-sigma_i d_i); reference for the log-space form.
double transmittance_product(std::span<const double> sigma, std::span<const double> d);

/// Index of the first sample whose cumulative weight reaches half the total.
/// Returns weights.size() when the total is zero.
std::size_t weight_median_index(std::span<const double> weights);

}  // namespace alphainv
