#include "alphainv/volrend.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "alphainv/error.hpp"

namespace alphainv {

Ray Ray::make(const Vec3& origin, const Vec3& direction, double t_near, double t_far) {
  if (!is_finite(origin) || !is_finite(direction)) {
    throw DomainError("Ray: origin and direction must be finite");
  }
  const double n = norm(direction);
  if (!(n > 0.0)) {
    throw DomainError("Ray: direction must be nonzero");
  }
  if (!std::isfinite(t_near) || !std::isfinite(t_far) || t_near < 0.0 || !(t_far > t_near)) {
    throw DomainError(fmt::format("Ray: need 0 <= t_near < t_far, got [{}, {}]", t_near, t_far));
  }
  return Ray{origin, direction / n, t_near, t_far};
}

void RaySamples::validate() const {
  if (t_mids.size() != intervals.size()) {
    throw DomainError("RaySamples: t_mids and intervals differ in length");
  }
  for (std::size_t i = 0; i < t_mids.size(); ++i) {
    if (!(intervals[i] > 0.0) || !std::isfinite(intervals[i])) {
      throw DomainError(fmt::format("RaySamples: interval {} is not positive ({})", i, intervals[i]));
    }
    if (i > 0 && !(t_mids[i] > t_mids[i - 1])) {
      throw DomainError(fmt::format("RaySamples: t_mids not strictly increasing at {}", i));
    }
  }
}

double alpha_from_sigma(double sigma, double d) {
  if (!std::isfinite(sigma) || sigma < 0.0) {
    throw DomainError(fmt::format("alpha_from_sigma: sigma must be finite and >= 0, got {}", sigma));
  }
  if (!std::isfinite(d) || !(d > 0.0)) {
    throw DomainError(fmt::format("alpha_from_sigma: d must be finite and > 0, got {}", d));
  }
  return -std::expm1(-sigma * d);
}

double clamp_alpha(double alpha) { return std::clamp(alpha, 0.0, kMaxAlpha); }

RenderOutput composite(std::span<const double> alphas, std::span<const Vec3> colors,
                       std::span<const double> t_mids) {
  if (alphas.size() != colors.size() || alphas.size() != t_mids.size()) {
    throw DomainError(fmt::format("composite: length mismatch (alphas {}, colors {}, t {})",
                                  alphas.size(), colors.size(), t_mids.size()));
  }
  RenderOutput out;
  out.weights.resize(alphas.size());
  out.alphas.resize(alphas.size());
  double transmittance = 1.0;
  double weight_sum = 0.0;
  double depth_acc = 0.0;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    const double a = clamp_alpha(alphas[i]);
    const double w = transmittance * a;
    out.alphas[i] = a;
    out.weights[i] = w;
    out.color += w * colors[i];
    depth_acc += w * t_mids[i];
    weight_sum += w;
    transmittance *= (1.0 - a);
  }
  out.final_transmittance = transmittance;
  out.depth = weight_sum > 0.0 ? depth_acc / weight_sum : 0.0;
  return out;
}

CompositeGrad composite_backward(std::span<const double> alphas, std::span<const Vec3> colors,
                                 const Vec3& d_color, double d_final_transmittance) {
  if (alphas.size() != colors.size()) {
    throw DomainError("composite_backward: length mismatch");
  }
  const std::size_t n = alphas.size();
  CompositeGrad g;
  g.d_alpha.assign(n, 0.0);
  g.d_color.assign(n, Vec3{});
  if (n == 0) return g;

  std::vector<double> a(n);
  for (std::size_t i = 0; i < n; ++i) a[i] = clamp_alpha(alphas[i]);

  // prefix[i] = prod_{j<i}(1-a_j); suffix[i] = prod_{j>i}(1-a_j)
  std::vector<double> prefix(n), suffix(n);
  prefix[0] = 1.0;
  for (std::size_t i = 1; i < n; ++i) prefix[i] = prefix[i - 1] * (1.0 - a[i - 1]);
  suffix[n - 1] = 1.0;
  for (std::size_t i = n - 1; i-- > 0;) suffix[i] = suffix[i + 1] * (1.0 - a[i + 1]);

  // behind = color composited from the samples after i, as seen from just behind i.
  Vec3 behind{};
  for (std::size_t i = n; i-- > 0;) {
    g.d_color[i] = (prefix[i] * a[i]) * d_color;
    const bool clamped = alphas[i] < 0.0 || alphas[i] > kMaxAlpha;
    if (!clamped) {
      const double dc = prefix[i] * dot(colors[i] - behind, d_color);
      const double dt = -prefix[i] * suffix[i] * d_final_transmittance;
      g.d_alpha[i] = dc + dt;
    }
    behind = a[i] * colors[i] + (1.0 - a[i]) * behind;
  }
  return g;
}

double transmittance_log_space(std::span<const double> sigma_log, std::span<const double> d) {
  if (sigma_log.size() != d.size()) {
    throw DomainError("transmittance_log_space: length mismatch");
  }
  double optical_depth = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (std::isnan(sigma_log[i]) || sigma_log[i] == INFINITY || !std::isfinite(d[i]) || !(d[i] > 0.0)) {
      throw DomainError(fmt::format("transmittance_log_space: bad input at {}", i));
    }
    optical_depth += std::exp(sigma_log[i] + std::log(d[i]));
  }
  return std::exp(-optical_depth);
}

double transmittance_product(std::span<const double> sigma, std::span<const double> d) {
  if (sigma.size() != d.size()) {
    throw DomainError("transmittance_product: length mismatch");
  }
  double t = 1.0;
  for (std::size_t i = 0; i < d.size(); ++i) t *= (1.0 - alpha_from_sigma(sigma[i], d[i]));
  return t;
}

std::size_t weight_median_index(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) return weights.size();
  const double half = 0.5 * total;
  double cum = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    cum += weights[i];
    if (cum >= half) return i;
  }
  return weights.size() - 1;
}

}  // namespace alphainv
