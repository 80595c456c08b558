#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "alphainv/activations.hpp"
#include "alphainv/aabb.hpp"
#include "alphainv/fields.hpp"
#include "alphainv/sampling.hpp"
#include "alphainv/scene.hpp"

namespace alphainv {

/// Density as a function of position.
using DensityFn = std::function<double(const Vec3&)>;

DensityFn field_density(const Field& field, const ActivationConfig& act);
DensityFn scene_density(const SceneSpec& scene);

// ---------------------------------------------------------------------------
// Volume statistics

inline constexpr double kEmptySigma = 1e-4;

struct PercentileSummary {
  std::vector<double> edges;      // band lower edges in percent: 0, step, 2*step, ...
  std::vector<double> band_mean;  // mean sigma within each band of the sorted values
  double empty_fraction = 0.0;    // fraction of queries with sigma < empty_eps
  std::size_t count = 0;

  /// Mean of the highest band.
  double top_band_mean() const { return band_mean.back(); }
};

/// Queries sigma at the grid_res^3 cell centers of bounds, sorts the values and
/// averages them within consecutive percent_step-wide percentile bands.
PercentileSummary volume_stats(const DensityFn& sigma, const Aabb& bounds, std::size_t grid_res = 64,
                               double percent_step = 2.0, double empty_eps = kEmptySigma);
PercentileSummary volume_stats(const Field& field, const ActivationConfig& act, const Aabb& bounds,
                               std::size_t grid_res = 64, double percent_step = 2.0, double empty_eps = kEmptySigma);

std::string to_csv(const PercentileSummary& s);

// ---------------------------------------------------------------------------
// Surface statistics

/// Marks rays whose total weight is below this as having no surface.
inline constexpr double kMinSurfaceWeight = 1e-4;
/// Value stored for masked pixels.
inline constexpr double kMaskedSentinel = -1.0;

struct SurfaceMap {
  int width = 0;
  int height = 0;
  std::vector<double> sigma;     // sigma at the weight-CDF median sample
  std::vector<double> median_t;  // t of that sample
  std::vector<bool> masked;

  std::size_t size() const { return sigma.size(); }
};

/// Per pixel: render, take the first sample whose cumulative weight reaches half
/// the total (ties resolve toward smaller t) and report sigma there.
SurfaceMap surface_stats(const Field& field, const ActivationConfig& act, const SceneSpec& scene, std::size_t camera,
                         const SamplerSpec& sampler, int threads = 1);

/// Same procedure over the oracle scene densities.
SurfaceMap surface_stats(const SceneSpec& scene, std::size_t camera, const SamplerSpec& sampler, int threads = 1);

inline constexpr double kRatioFloor = 1e-4;

struct RatioMap {
  int width = 0;
  int height = 0;
  std::vector<double> ratio;
  std::vector<bool> masked;
  std::vector<bool> clamped;  // at least one operand was raised to kRatioFloor
  std::size_t clamped_count = 0;
};

/// sigma_a / sigma_b per pixel with both floored at kRatioFloor.
RatioMap density_ratio_map(const SurfaceMap& a, const SurfaceMap& b);

std::string to_csv(const SurfaceMap& m);
std::string to_csv(const RatioMap& m);

// ---------------------------------------------------------------------------
// Required-sigma table

struct SigmaTableRow {
  std::size_t n_samples = 0;
  double interval = 0.0;
  double alpha = 0.0;
  double sigma = 0.0;
};

/// One row per (N, alpha): d = L / N and sigma = -ln(1 - alpha) / d.
std::vector<SigmaTableRow> required_sigma_table(double L, std::span<const std::size_t> sample_counts,
                                                std::span<const double> alpha_targets);
std::string to_csv(std::span<const SigmaTableRow> rows);

// ---------------------------------------------------------------------------
// Alpha histogram at initialization

struct Histogram {
  std::vector<double> edges;  // bins + 1 edges over [0, 1]
  std::vector<std::size_t> counts;
  std::size_t total = 0;

  /// Fraction of mass in bins whose lower edge is >= threshold.
  double mass_at_or_above(double threshold) const;
};

/// Renders n_rays seeded random camera rays once and pools every per-sample alpha.
Histogram init_alpha_histogram(const Field& field, const ActivationConfig& act, const SceneSpec& scene,
                               const SamplerSpec& sampler, std::size_t n_rays, std::size_t bins = 20,
                               std::uint64_t seed = 0);
std::string to_csv(const Histogram& h);

/// "{report}_{scene}_{k}_{activation}.{ext}"
std::string report_filename(std::string_view report, std::string_view scene, double k, std::string_view activation,
                            std::string_view ext);

}  // namespace alphainv
