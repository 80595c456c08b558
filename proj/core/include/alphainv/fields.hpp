#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "alphainv/aabb.hpp"
#include "alphainv/activations.hpp"
#include "alphainv/volrend.hpp"

namespace alphainv {

enum class FieldKind : std::uint32_t { Constant = 0, VoxelGrid = 1, TinyMlp = 2 };

std::string_view to_string(FieldKind kind);
FieldKind parse_field_kind(std::string_view name);

/// A trainable density+color field over an axis-aligned box.
///
/// Parameter layouts (all flat, 64-bit):
///   Constant   metadata {}                  params [x, r, g, b]
///   VoxelGrid  metadata {R}                 params [R^3 density][R^3 x 3 color], node (i,j,k)
///                                           at index (k*R + j)*R + i, nodes span the bounds
///   TinyMlp    metadata {3, h1, h2, 4}      params [W1 h1x3][b1][W2 h2xh1][b2][W3 4xh2][b3],
///                                           input is the position mapped to [-1,1]^3,
///                                           output 0 is raw density, 1..3 color logits
///
/// Queries outside the bounds return raw_density = -inf (sigma = 0).
class Field {
 public:
  Field(FieldKind kind, std::vector<std::uint32_t> metadata, Aabb bounds, std::vector<double> params);

  FieldKind kind() const { return kind_; }
  const std::vector<std::uint32_t>& metadata() const { return metadata_; }
  const Aabb& bounds() const { return bounds_; }
  std::span<const double> params() const { return params_; }
  std::span<double> mutable_params() { return params_; }
  std::size_t num_params() const { return params_.size(); }

  FieldResponse query(const Vec3& p) const;

  /// Adds d(raw_density)/dtheta * d_raw + d(color_logits)/dtheta . d_logits into grad.
  void backward(const Vec3& p, double d_raw, const Vec3& d_logits, std::span<double> grad) const;

  /// Same field with bounds multiplied by k; parameters untouched.
  Field with_scaled_bounds(double k) const;

  friend bool operator==(const Field&, const Field&) = default;

 private:
  FieldResponse query_voxel(const Vec3& u) const;
  FieldResponse query_mlp(const Vec3& u) const;
  void backward_voxel(const Vec3& u, double d_raw, const Vec3& d_logits, std::span<double> grad) const;
  void backward_mlp(const Vec3& u, double d_raw, const Vec3& d_logits, std::span<double> grad) const;

  FieldKind kind_;
  std::vector<std::uint32_t> metadata_;
  Aabb bounds_;
  std::vector<double> params_;
};

/// Expected parameter count for kind + metadata; throws DomainError on bad metadata.
std::size_t expected_param_count(FieldKind kind, std::span<const std::uint32_t> metadata);

/// Deterministic initialization. For tau_target > 0 the raw density output over
/// uniform in-bounds points is calibrated to mean 0 and standard deviation tau_target.
/// MLP hidden layers use Kaiming-uniform weights (gain sqrt 2).
Field init_field(FieldKind kind, std::vector<std::uint32_t> metadata, const Aabb& bounds,
                 double tau_target, std::uint64_t seed);

struct RawStats {
  double mean = 0.0;
  double stddev = 0.0;
};

/// Sample mean/std of raw density at n uniform-random in-bounds points.
RawStats measure_raw_stats(const Field& field, std::size_t n = 100000, std::uint64_t seed = 0);

/// Field whose density is the original's divided by k under act (Exp/ExpGumbel only).
/// Throws CapabilityError for ReLU/softplus.
Field scale_field_density(const Field& field, double k, const ActivationConfig& act);

/// scale_field_density plus bounds scaled by k: the field as it would appear in
/// a scene scaled by k.
Field rescale_field(const Field& field, double k, const ActivationConfig& act);

/// Binary checkpoint (little-endian):
///   16 bytes  magic "ALPHAINV-FLD" + 4 NUL
///   u32       field kind
///   u32       metadata byte length M
///   M bytes   u32 count, count x u32 dims, 6 x f64 bounds (min xyz, max xyz)
///   P x f64   parameters (P implied by kind + dims)
void write_checkpoint(const Field& field, std::ostream& out);
Field read_checkpoint(std::istream& in);
void save_checkpoint(const Field& field, const std::string& path);
Field load_checkpoint(const std::string& path);

}  // namespace alphainv
