#pragma once

#include <span>
#include <string>
#include <vector>

#include "alphainv/vec3.hpp"

namespace alphainv {

struct Image {
  int width = 0;
  int height = 0;
  std::vector<Vec3> pixels;  // row-major, top row first

  Image() = default;
  Image(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h)) {}

  Vec3& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  const Vec3& at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

/// 10 log10(1 / MSE) over all channels; identical inputs give the sentinel 99.
/// Throws DomainError when sizes differ.
double psnr(std::span<const Vec3> a, std::span<const Vec3> b);
double psnr(const Image& a, const Image& b);

inline constexpr double kPsnrIdentical = 99.0;

/// Binary PPM (P6); values are clamped to [0,1] and quantized to 8 bits.
void write_ppm(const std::string& path, const Image& image);

/// Scalar map rendered through a fixed viridis-like ramp over [lo, hi].
/// Entries flagged in `mask` are drawn in mid gray.
Image colorize(std::span<const double> values, int width, int height, double lo, double hi,
               const std::vector<bool>& mask = {});

}  // namespace alphainv
