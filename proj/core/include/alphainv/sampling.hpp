#pragma once

#include <cstdint>
#include <span>
#include <string_view>

#include "alphainv/volrend.hpp"

namespace alphainv {

enum class SamplerKind { Uniform, Stratified, Disparity, Importance };
enum class Contraction { None, MipNerf360 };

std::string_view to_string(SamplerKind kind);
SamplerKind parse_sampler_kind(std::string_view name);
std::string_view to_string(Contraction c);
Contraction parse_contraction(std::string_view name);

/// Per-ray sampling strategy. n_samples does not change with scene scale.
struct SamplerSpec {
  SamplerKind kind = SamplerKind::Uniform;
  std::size_t n_samples = 64;
  std::size_t n_importance = 0;  // Importance only
  std::uint64_t seed = 0;
  Contraction contraction = Contraction::None;

  /// Throws DomainError on n_samples == 0, or Disparity with t_near == 0.
  void validate(double t_near) const;
};

/// Identifies the random draws of one ray in one pass.
struct SampleKey {
  std::uint64_t ray_id = 0;
  std::uint64_t epoch = 0;
};

/// Samples at the midpoints of the given segment boundaries (b_0 < ... < b_N).
RaySamples samples_from_boundaries(std::span<const double> boundaries);

/// Samples at sorted points inside (t_near, t_far). Segment i spans from the
/// midpoint with its predecessor to the midpoint with its successor; the first and
/// last segments extend to t_near and t_far.
RaySamples samples_from_points(std::span<const double> points, double t_near, double t_far);

/// Draws samples along ray. All intervals are metric (uncontracted) lengths.
///
/// Uniform     equal bins, sample at bin centers
/// Stratified  one jittered point per equal bin, keyed by (seed, ray_id, sample, epoch)
/// Disparity   bin boundaries linear in 1/t, sample at bin centers
/// Importance  coarse Uniform pass of n_samples (whose weights are prev_weights)
///             plus n_importance inverse-CDF draws; falls back to Uniform with
///             n_samples + n_importance samples when all weights are zero
RaySamples sample_ray(const Ray& ray, const SamplerSpec& spec, SampleKey key = {},
                      std::span<const double> prev_weights = {});

/// Mip-NeRF 360 contraction: identity inside the unit ball, else (2 - 1/|p|) p/|p|.
Vec3 contract(const Vec3& p);

}  // namespace alphainv
