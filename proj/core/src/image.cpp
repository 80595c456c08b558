#include "alphainv/image.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "alphainv/error.hpp"

namespace alphainv {

double psnr(std::span<const Vec3> a, std::span<const Vec3> b) {
  if (a.size() != b.size() || a.empty()) {
    throw DomainError(fmt::format("psnr: size mismatch ({} vs {})", a.size(), b.size()));
  }
  double se = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Vec3 d = a[i] - b[i];
    se += dot(d, d);
  }
  const double mse = se / (3.0 * static_cast<double>(a.size()));
  if (mse == 0.0) return kPsnrIdentical;
  return 10.0 * std::log10(1.0 / mse);
}

double psnr(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height) {
    throw DomainError(fmt::format("psnr: dimension mismatch ({}x{} vs {}x{})", a.width, a.height, b.width, b.height));
  }
  return psnr(a.pixels, b.pixels);
}

void write_ppm(const std::string& path, const Image& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DomainError(fmt::format("cannot open '{}' for writing", path));
  out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
  for (const Vec3& p : image.pixels) {
    for (int c = 0; c < 3; ++c) {
      const double v = std::clamp(p[c], 0.0, 1.0);
      out.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
    }
  }
}

namespace {

// Samples of the viridis colormap at t = 0, 0.125, ..., 1.
constexpr std::array<Vec3, 9> kRamp = {{{0.267, 0.005, 0.329},
                                        {0.283, 0.141, 0.458},
                                        {0.254, 0.265, 0.530},
                                        {0.207, 0.372, 0.553},
                                        {0.164, 0.471, 0.558},
                                        {0.128, 0.567, 0.551},
                                        {0.135, 0.659, 0.518},
                                        {0.478, 0.821, 0.318},
                                        {0.993, 0.906, 0.144}}};

Vec3 ramp(double t) {
  t = std::clamp(t, 0.0, 1.0) * static_cast<double>(kRamp.size() - 1);
  const auto i = std::min(static_cast<std::size_t>(t), kRamp.size() - 2);
  const double f = t - static_cast<double>(i);
  return (1.0 - f) * kRamp[i] + f * kRamp[i + 1];
}

}  // namespace

Image colorize(std::span<const double> values, int width, int height, double lo, double hi,
               const std::vector<bool>& mask) {
  Image img(width, height);
  if (values.size() != img.pixels.size()) throw DomainError("colorize: size mismatch");
  if (!mask.empty() && mask.size() != values.size()) throw DomainError("colorize: mask size mismatch");
  const double span = hi > lo ? hi - lo : 1.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const bool masked = !mask.empty() && mask[i];
    img.pixels[i] = masked || !std::isfinite(values[i]) ? Vec3{0.5, 0.5, 0.5} : ramp((values[i] - lo) / span);
  }
  return img;
}

}  // namespace alphainv
