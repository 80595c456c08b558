#pragma once

#include "alphainv/vec3.hpp"

namespace alphainv {

/// Axis-aligned box [min, max].
struct Aabb {
  Vec3 min;
  Vec3 max;

  Vec3 extent() const { return max - min; }
  double volume() const {
    const Vec3 e = extent();
    return e.x * e.y * e.z;
  }
  bool contains(const Vec3& p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y && p.z >= min.z && p.z <= max.z;
  }
  bool non_degenerate() const { return max.x > min.x && max.y > min.y && max.z > min.z; }
  Aabb scaled(double k) const { return {min * k, max * k}; }

  friend bool operator==(const Aabb&, const Aabb&) = default;
};

}  // namespace alphainv
