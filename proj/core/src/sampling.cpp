#include "alphainv/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <fmt/format.h>

#include "alphainv/error.hpp"
#include "alphainv/random.hpp"

namespace alphainv {

std::string_view to_string(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::Uniform:
      return "uniform";
    case SamplerKind::Stratified:
      return "stratified";
    case SamplerKind::Disparity:
      return "disparity";
    case SamplerKind::Importance:
      return "importance";
  }
  return "unknown";
}

SamplerKind parse_sampler_kind(std::string_view name) {
  if (name == "uniform") return SamplerKind::Uniform;
  if (name == "stratified") return SamplerKind::Stratified;
  if (name == "disparity") return SamplerKind::Disparity;
  if (name == "importance") return SamplerKind::Importance;
  throw DomainError(fmt::format("unknown sampler '{}' (expected uniform|stratified|disparity|importance)", name));
}

std::string_view to_string(Contraction c) { return c == Contraction::None ? "none" : "mipnerf360"; }

Contraction parse_contraction(std::string_view name) {
  if (name == "none") return Contraction::None;
  if (name == "mipnerf360") return Contraction::MipNerf360;
  throw DomainError(fmt::format("unknown contraction '{}' (expected none|mipnerf360)", name));
}

void SamplerSpec::validate(double t_near) const {
  if (n_samples == 0) throw DomainError("sampler: n_samples must be >= 1");
  if (kind == SamplerKind::Disparity && !(t_near > 0.0)) {
    throw DomainError("sampler: disparity sampling requires t_near > 0");
  }
}

RaySamples samples_from_boundaries(std::span<const double> b) {
  RaySamples s;
  if (b.size() < 2) return s;
  s.t_mids.reserve(b.size() - 1);
  s.intervals.reserve(b.size() - 1);
  for (std::size_t i = 0; i + 1 < b.size(); ++i) {
    s.t_mids.push_back(0.5 * (b[i] + b[i + 1]));
    s.intervals.push_back(b[i + 1] - b[i]);
  }
  return s;
}

RaySamples samples_from_points(std::span<const double> points, double t_near, double t_far) {
  RaySamples s;
  const std::size_t n = points.size();
  s.t_mids.assign(points.begin(), points.end());
  s.intervals.resize(n);
  double left = t_near;
  for (std::size_t i = 0; i < n; ++i) {
    const double right = i + 1 < n ? 0.5 * (points[i] + points[i + 1]) : t_far;
    s.intervals[i] = right - left;
    left = right;
  }
  return s;
}

namespace {

std::vector<double> uniform_boundaries(double t0, double t1, std::size_t n) {
  std::vector<double> b(n + 1);
  const double step = (t1 - t0) / static_cast<double>(n);
  for (std::size_t i = 0; i <= n; ++i) b[i] = t0 + step * static_cast<double>(i);
  b[n] = t1;
  return b;
}

RaySamples importance(const Ray& ray, const SamplerSpec& spec, SampleKey key,
                      std::span<const double> prev_weights) {
  const std::size_t n = spec.n_samples;
  if (prev_weights.size() != n) {
    throw DomainError(fmt::format("importance sampler: expected {} coarse weights, got {}", n, prev_weights.size()));
  }
  double total = 0.0;
  for (double w : prev_weights) total += (std::isfinite(w) && w > 0.0) ? w : 0.0;

  const std::vector<double> bounds = uniform_boundaries(ray.t_near, ray.t_far, n);
  if (!(total > 0.0)) {
    const auto fine = uniform_boundaries(ray.t_near, ray.t_far, n + spec.n_importance);
    return samples_from_boundaries(fine);
  }

  std::vector<double> cdf(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = (std::isfinite(prev_weights[i]) && prev_weights[i] > 0.0) ? prev_weights[i] : 0.0;
    cdf[i + 1] = cdf[i] + w / total;
  }
  cdf[n] = 1.0;

  std::vector<double> points;
  points.reserve(n + spec.n_importance);
  for (std::size_t i = 0; i < n; ++i) points.push_back(0.5 * (bounds[i] + bounds[i + 1]));

  const CounterRng rng(substream(spec.seed, "importance"));
  const std::size_t m = spec.n_importance;
  for (std::size_t j = 0; j < m; ++j) {
    const double u = (static_cast<double>(j) + rng.uniform(key.ray_id, j, key.epoch)) / static_cast<double>(m);
    // First bin whose upper CDF edge exceeds u; zero-weight bins are skipped.
    const auto it = std::upper_bound(cdf.begin() + 1, cdf.end(), u);
    const std::size_t bin = std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()) - 1, n - 1);
    const double span = cdf[bin + 1] - cdf[bin];
    const double frac = span > 0.0 ? std::clamp((u - cdf[bin]) / span, 0.0, 1.0) : 0.5;
    const double t = bounds[bin] + frac * (bounds[bin + 1] - bounds[bin]);
    if (t > ray.t_near && t < ray.t_far) points.push_back(t);
  }
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  return samples_from_points(points, ray.t_near, ray.t_far);
}

}  // namespace

RaySamples sample_ray(const Ray& ray, const SamplerSpec& spec, SampleKey key, std::span<const double> prev_weights) {
  spec.validate(ray.t_near);
  const std::size_t n = spec.n_samples;
  switch (spec.kind) {
    case SamplerKind::Uniform:
      return samples_from_boundaries(uniform_boundaries(ray.t_near, ray.t_far, n));

    case SamplerKind::Stratified: {
      const auto b = uniform_boundaries(ray.t_near, ray.t_far, n);
      const CounterRng rng(substream(spec.seed, "stratified"));
      std::vector<double> points(n);
      for (std::size_t i = 0; i < n; ++i) {
        points[i] = b[i] + rng.uniform(key.ray_id, i, key.epoch) * (b[i + 1] - b[i]);
      }
      return samples_from_points(points, ray.t_near, ray.t_far);
    }

    case SamplerKind::Disparity: {
      const double inv_near = 1.0 / ray.t_near;
      const double inv_far = 1.0 / ray.t_far;
      std::vector<double> b(n + 1);
      for (std::size_t i = 0; i <= n; ++i) {
        const double s = static_cast<double>(i) / static_cast<double>(n);
        b[i] = 1.0 / (inv_near + s * (inv_far - inv_near));
      }
      b[0] = ray.t_near;
      b[n] = ray.t_far;
      return samples_from_boundaries(b);
    }

    case SamplerKind::Importance:
      return importance(ray, spec, key, prev_weights);
  }
  throw DomainError("sample_ray: unknown sampler kind");
}

Vec3 contract(const Vec3& p) {
  const double r = norm(p);
  if (r <= 1.0) return p;
  return ((2.0 - 1.0 / r) / r) * p;
}

}  // namespace alphainv
