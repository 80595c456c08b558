#include "alphainv/stats.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "alphainv/error.hpp"
#include "alphainv/parallel.hpp"
#include "alphainv/random.hpp"
#include "alphainv/render.hpp"

namespace alphainv {

DensityFn field_density(const Field& field, const ActivationConfig& act) {
  return [&field, act](const Vec3& p) { return sigma(act, field.query(p).raw_density).value; };
}

DensityFn scene_density(const SceneSpec& scene) {
  return [&scene](const Vec3& p) { return scene.density_at(p); };
}

PercentileSummary volume_stats(const DensityFn& sigma_at, const Aabb& bounds, std::size_t grid_res,
                               double percent_step, double empty_eps) {
  if (grid_res < 2) throw DomainError("volume_stats: grid_res must be >= 2");
  if (!(percent_step > 0.0 && percent_step <= 100.0)) throw DomainError("volume_stats: percent_step must lie in (0, 100]");
  const Vec3 e = bounds.extent();
  const double r = static_cast<double>(grid_res);
  std::vector<double> values;
  values.reserve(grid_res * grid_res * grid_res);
  for (std::size_t k = 0; k < grid_res; ++k) {
    for (std::size_t j = 0; j < grid_res; ++j) {
      for (std::size_t i = 0; i < grid_res; ++i) {
        const Vec3 p{bounds.min.x + (static_cast<double>(i) + 0.5) / r * e.x,
                     bounds.min.y + (static_cast<double>(j) + 0.5) / r * e.y,
                     bounds.min.z + (static_cast<double>(k) + 0.5) / r * e.z};
        values.push_back(sigma_at(p));
      }
    }
  }
  std::sort(values.begin(), values.end());

  PercentileSummary s;
  s.count = values.size();
  const auto bands = static_cast<std::size_t>(std::ceil(100.0 / percent_step - 1e-9));
  const double n = static_cast<double>(values.size());
  for (std::size_t b = 0; b < bands; ++b) {
    const double lo_pct = percent_step * static_cast<double>(b);
    const double hi_pct = std::min(100.0, percent_step * static_cast<double>(b + 1));
    auto lo = static_cast<std::size_t>(std::floor(lo_pct / 100.0 * n));
    auto hi = static_cast<std::size_t>(std::floor(hi_pct / 100.0 * n));
    if (b + 1 == bands) hi = values.size();
    if (hi <= lo) hi = std::min(lo + 1, values.size());
    double acc = 0.0;
    for (std::size_t i = lo; i < hi; ++i) acc += values[i];
    s.edges.push_back(lo_pct);
    s.band_mean.push_back(hi > lo ? acc / static_cast<double>(hi - lo) : 0.0);
  }
  const auto empty = std::lower_bound(values.begin(), values.end(), empty_eps) - values.begin();
  s.empty_fraction = static_cast<double>(empty) / n;
  return s;
}

PercentileSummary volume_stats(const Field& field, const ActivationConfig& act, const Aabb& bounds,
                               std::size_t grid_res, double percent_step, double empty_eps) {
  return volume_stats(field_density(field, act), bounds, grid_res, percent_step, empty_eps);
}

std::string to_csv(const PercentileSummary& s) {
  std::string out = "percentile_lo,mean_sigma\n";
  for (std::size_t i = 0; i < s.edges.size(); ++i) out += fmt::format("{:g},{:.9g}\n", s.edges[i], s.band_mean[i]);
  return out;
}

namespace {

template <class SigmaAt, class Render>
SurfaceMap surface_map(const SceneSpec& scene, std::size_t camera, const SamplerSpec& sampler, int threads,
                       SigmaAt&& sigma_at, Render&& render) {
  const Camera& cam = scene.cameras.at(camera);
  SurfaceMap m;
  m.width = cam.width;
  m.height = cam.height;
  const std::size_t n = cam.pixel_count();
  m.sigma.assign(n, kMaskedSentinel);
  m.median_t.assign(n, kMaskedSentinel);
  std::vector<char> masked(n, 0);
  parallel_for(n, threads, [&](std::size_t i) {
    const int x = static_cast<int>(i % static_cast<std::size_t>(cam.width));
    const int y = static_cast<int>(i / static_cast<std::size_t>(cam.width));
    const Ray ray = scene.camera_ray(camera, x, y);
    const RaySamples s = sample_ray(ray, sampler, {i, 0});
    const RenderOutput out = render(ray, s);
    double total = 0.0;
    for (double w : out.weights) total += w;
    if (total < kMinSurfaceWeight) {
      masked[i] = 1;
      return;
    }
    const std::size_t idx = weight_median_index(out.weights);
    m.median_t[i] = s.t_mids[idx];
    m.sigma[i] = sigma_at(ray.at(s.t_mids[idx]), s.intervals[idx], out.alphas[idx]);
  });
  m.masked.assign(masked.begin(), masked.end());
  return m;
}

}  // namespace

SurfaceMap surface_stats(const Field& field, const ActivationConfig& act, const SceneSpec& scene, std::size_t camera,
                         const SamplerSpec& sampler, int threads) {
  return surface_map(
      scene, camera, sampler, threads,
      [&](const Vec3& p, double, double) {
        const Vec3 q = sampler.contraction == Contraction::MipNerf360 ? contract(p) : p;
        return sigma(act, field.query(q).raw_density).value;
      },
      [&](const Ray& ray, const RaySamples& s) { return render_ray(field, ray, s, act, sampler.contraction); });
}

SurfaceMap surface_stats(const SceneSpec& scene, std::size_t camera, const SamplerSpec& sampler, int threads) {
  return surface_map(
      scene, camera, sampler, threads, [&](const Vec3& p, double, double) { return scene.density_at(p); },
      [&](const Ray& ray, const RaySamples& s) {
        std::vector<double> alphas(s.size());
        std::vector<Vec3> colors(s.size(), Vec3{1.0, 1.0, 1.0});
        for (std::size_t i = 0; i < s.size(); ++i) {
          alphas[i] = alpha_from_sigma(scene.density_at(ray.at(s.t_mids[i])), s.intervals[i]);
        }
        return composite(alphas, colors, s.t_mids);
      });
}

RatioMap density_ratio_map(const SurfaceMap& a, const SurfaceMap& b) {
  if (a.width != b.width || a.height != b.height || a.size() != b.size()) {
    throw DomainError(fmt::format("density_ratio_map: dimension mismatch ({}x{} vs {}x{})", a.width, a.height,
                                  b.width, b.height));
  }
  RatioMap r;
  r.width = a.width;
  r.height = a.height;
  const std::size_t n = a.size();
  r.ratio.assign(n, kMaskedSentinel);
  r.masked.assign(n, false);
  r.clamped.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    if (a.masked[i] || b.masked[i]) {
      r.masked[i] = true;
      continue;
    }
    const double sa = std::max(a.sigma[i], kRatioFloor);
    const double sb = std::max(b.sigma[i], kRatioFloor);
    if (sa != a.sigma[i] || sb != b.sigma[i]) {
      r.clamped[i] = true;
      ++r.clamped_count;
    }
    r.ratio[i] = sa / sb;
  }
  return r;
}

std::string to_csv(const SurfaceMap& m) {
  std::string out = "x,y,sigma,median_t,masked\n";
  for (std::size_t i = 0; i < m.size(); ++i) {
    out += fmt::format("{},{},{:.9g},{:.9g},{}\n", i % static_cast<std::size_t>(m.width),
                       i / static_cast<std::size_t>(m.width), m.sigma[i], m.median_t[i], m.masked[i] ? 1 : 0);
  }
  return out;
}

std::string to_csv(const RatioMap& m) {
  std::string out = "x,y,ratio,masked,clamped\n";
  for (std::size_t i = 0; i < m.ratio.size(); ++i) {
    out += fmt::format("{},{},{:.9g},{},{}\n", i % static_cast<std::size_t>(m.width),
                       i / static_cast<std::size_t>(m.width), m.ratio[i], m.masked[i] ? 1 : 0,
                       m.clamped[i] ? 1 : 0);
  }
  return out;
}

std::vector<SigmaTableRow> required_sigma_table(double L, std::span<const std::size_t> sample_counts,
                                                std::span<const double> alpha_targets) {
  if (!(L > 0.0) || !std::isfinite(L)) throw DomainError("required_sigma_table: L must be > 0");
  if (sample_counts.empty() || alpha_targets.empty()) {
    throw DomainError("required_sigma_table: sample counts and alphas must be non-empty");
  }
  std::vector<SigmaTableRow> rows;
  for (std::size_t n : sample_counts) {
    if (n == 0) throw DomainError("required_sigma_table: sample count must be >= 1");
    const double d = L / static_cast<double>(n);
    for (double a : alpha_targets) rows.push_back({n, d, a, required_sigma(a, d)});
  }
  return rows;
}

std::string to_csv(std::span<const SigmaTableRow> rows) {
  std::string out = "n_samples,interval,alpha,sigma\n";
  for (const auto& r : rows) out += fmt::format("{},{:.9g},{:g},{:.6f}\n", r.n_samples, r.interval, r.alpha, r.sigma);
  return out;
}

double Histogram::mass_at_or_above(double threshold) const {
  if (total == 0) return 0.0;
  std::size_t acc = 0;
  for (std::size_t b = 0; b < counts.size(); ++b) {
    if (edges[b] >= threshold) acc += counts[b];
  }
  return static_cast<double>(acc) / static_cast<double>(total);
}

Histogram init_alpha_histogram(const Field& field, const ActivationConfig& act, const SceneSpec& scene,
                               const SamplerSpec& sampler, std::size_t n_rays, std::size_t bins, std::uint64_t seed) {
  if (n_rays == 0) throw DomainError("init_alpha_histogram: n_rays must be >= 1");
  if (bins == 0) throw DomainError("init_alpha_histogram: bins must be >= 1");
  if (scene.cameras.empty()) throw DomainError("init_alpha_histogram: scene has no cameras");
  Histogram h;
  for (std::size_t b = 0; b <= bins; ++b) h.edges.push_back(static_cast<double>(b) / static_cast<double>(bins));
  h.counts.assign(bins, 0);
  const CounterRng rng(substream(seed, "histogram-rays"));
  for (std::size_t r = 0; r < n_rays; ++r) {
    const std::size_t cam = rng.bits(r, 0) % scene.cameras.size();
    const Camera& c = scene.cameras[cam];
    const int x = static_cast<int>(rng.bits(r, 1) % static_cast<std::uint64_t>(c.width));
    const int y = static_cast<int>(rng.bits(r, 2) % static_cast<std::uint64_t>(c.height));
    const Ray ray = scene.camera_ray(cam, x, y);
    const RaySamples s = sample_ray(ray, sampler, {r, 0});
    const RenderOutput out = render_ray(field, ray, s, act, sampler.contraction);
    for (double a : out.alphas) {
      const auto b = std::min(static_cast<std::size_t>(a * static_cast<double>(bins)), bins - 1);
      ++h.counts[b];
      ++h.total;
    }
  }
  return h;
}

std::string to_csv(const Histogram& h) {
  std::string out = "alpha_lo,alpha_hi,count,fraction\n";
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    out += fmt::format("{:g},{:g},{},{:.9g}\n", h.edges[b], h.edges[b + 1], h.counts[b],
                       h.total ? static_cast<double>(h.counts[b]) / static_cast<double>(h.total) : 0.0);
  }
  return out;
}

std::string report_filename(std::string_view report, std::string_view scene, double k, std::string_view activation,
                            std::string_view ext) {
  return fmt::format("{}_{}_{}_{}.{}", report, scene, k, activation, ext);
}

}  // namespace alphainv
