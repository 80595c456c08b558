#include "alphainv/fields.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>

#include <fmt/format.h>

#include "alphainv/error.hpp"
#include "alphainv/random.hpp"

namespace alphainv {

namespace {

constexpr std::size_t kMaxWidth = 256;

struct MlpShape {
  std::size_t h1, h2;
  std::size_t w1, b1, w2, b2, w3, b3;  // offsets into params
  std::size_t total;
};

MlpShape mlp_shape(std::span<const std::uint32_t> m) {
  MlpShape s{};
  s.h1 = m[1];
  s.h2 = m[2];
  s.w1 = 0;
  s.b1 = s.w1 + s.h1 * 3;
  s.w2 = s.b1 + s.h1;
  s.b2 = s.w2 + s.h2 * s.h1;
  s.w3 = s.b2 + s.h2;
  s.b3 = s.w3 + 4 * s.h2;
  s.total = s.b3 + 4;
  return s;
}

// Position mapped to the unit cube of the bounds.
Vec3 to_unit(const Aabb& b, const Vec3& p) {
  const Vec3 e = b.extent();
  return {(p.x - b.min.x) / e.x, (p.y - b.min.y) / e.y, (p.z - b.min.z) / e.z};
}

struct Trilinear {
  std::array<std::size_t, 8> node;
  std::array<double, 8> weight;
};

Trilinear trilinear(std::size_t res, const Vec3& u) {
  const double scale = static_cast<double>(res - 1);
  std::array<std::size_t, 3> i0{};
  std::array<double, 3> f{};
  for (int a = 0; a < 3; ++a) {
    const double g = std::clamp(u[a], 0.0, 1.0) * scale;
    const auto cell = std::min(static_cast<std::size_t>(g), res - 2);
    i0[a] = cell;
    f[a] = g - static_cast<double>(cell);
  }
  Trilinear t{};
  for (int c = 0; c < 8; ++c) {
    const std::size_t dx = c & 1, dy = (c >> 1) & 1, dz = (c >> 2) & 1;
    t.node[c] = ((i0[2] + dz) * res + (i0[1] + dy)) * res + (i0[0] + dx);
    t.weight[c] = (dx ? f[0] : 1.0 - f[0]) * (dy ? f[1] : 1.0 - f[1]) * (dz ? f[2] : 1.0 - f[2]);
  }
  return t;
}

template <class T>
void put(std::ostream& out, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.write(bytes.data(), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  std::array<char, sizeof(T)> bytes;
  if (!in.read(bytes.data(), sizeof(T))) {
    throw DomainError("checkpoint: unexpected end of data");
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T v;
  std::memcpy(&v, bytes.data(), sizeof(T));
  return v;
}

constexpr std::array<char, 16> kMagic = {'A', 'L', 'P', 'H', 'A', 'I', 'N', 'V',
                                         '-', 'F', 'L', 'D', '\0', '\0', '\0', '\0'};

}  // namespace

std::string_view to_string(FieldKind kind) {
  switch (kind) {
    case FieldKind::Constant:
      return "constant";
    case FieldKind::VoxelGrid:
      return "voxel_grid";
    case FieldKind::TinyMlp:
      return "tiny_mlp";
  }
  return "unknown";
}

FieldKind parse_field_kind(std::string_view name) {
  if (name == "constant") return FieldKind::Constant;
  if (name == "voxel_grid" || name == "voxel") return FieldKind::VoxelGrid;
  if (name == "tiny_mlp" || name == "mlp") return FieldKind::TinyMlp;
  throw DomainError(fmt::format("unknown field kind '{}' (expected constant|voxel_grid|tiny_mlp)", name));
}

std::size_t expected_param_count(FieldKind kind, std::span<const std::uint32_t> m) {
  switch (kind) {
    case FieldKind::Constant:
      if (!m.empty()) throw DomainError("constant field takes no metadata");
      return 4;
    case FieldKind::VoxelGrid: {
      if (m.size() != 1 || m[0] < 2 || m[0] > 1024) {
        throw DomainError("voxel_grid metadata must be {R} with 2 <= R <= 1024");
      }
      const std::size_t r = m[0];
      return 4 * r * r * r;
    }
    case FieldKind::TinyMlp:
      if (m.size() != 4 || m[0] != 3 || m[3] != 4 || m[1] == 0 || m[2] == 0 || m[1] > kMaxWidth ||
          m[2] > kMaxWidth) {
        throw DomainError(fmt::format("tiny_mlp metadata must be {{3, h1, h2, 4}} with 1 <= h <= {}", kMaxWidth));
      }
      return mlp_shape(m).total;
  }
  throw DomainError("unknown field kind");
}

Field::Field(FieldKind kind, std::vector<std::uint32_t> metadata, Aabb bounds, std::vector<double> params)
    : kind_(kind), metadata_(std::move(metadata)), bounds_(bounds), params_(std::move(params)) {
  if (!bounds_.non_degenerate() || !is_finite(bounds_.min) || !is_finite(bounds_.max)) {
    throw DomainError("Field: bounds must have positive finite extent on every axis");
  }
  const std::size_t expected = expected_param_count(kind_, metadata_);
  if (params_.size() != expected) {
    throw DomainError(fmt::format("Field: {} expects {} parameters, got {}", to_string(kind_), expected,
                                  params_.size()));
  }
}

FieldResponse Field::query(const Vec3& p) const {
  if (!bounds_.contains(p)) {
    return {-INFINITY, Vec3{}};
  }
  switch (kind_) {
    case FieldKind::Constant:
      return {params_[0], {params_[1], params_[2], params_[3]}};
    case FieldKind::VoxelGrid:
      return query_voxel(to_unit(bounds_, p));
    case FieldKind::TinyMlp:
      return query_mlp(to_unit(bounds_, p));
  }
  return {};
}

FieldResponse Field::query_voxel(const Vec3& u) const {
  const std::size_t r = metadata_[0];
  const std::size_t n = r * r * r;
  const Trilinear t = trilinear(r, u);
  FieldResponse out{0.0, Vec3{}};
  for (int c = 0; c < 8; ++c) {
    const double w = t.weight[c];
    const std::size_t i = t.node[c];
    out.raw_density += w * params_[i];
    out.color_logits.x += w * params_[n + 3 * i];
    out.color_logits.y += w * params_[n + 3 * i + 1];
    out.color_logits.z += w * params_[n + 3 * i + 2];
  }
  return out;
}

FieldResponse Field::query_mlp(const Vec3& u) const {
  const MlpShape s = mlp_shape(metadata_);
  const double* p = params_.data();
  const std::array<double, 3> in = {2.0 * u.x - 1.0, 2.0 * u.y - 1.0, 2.0 * u.z - 1.0};
  std::array<double, kMaxWidth> h1{}, h2{};
  for (std::size_t i = 0; i < s.h1; ++i) {
    double a = p[s.b1 + i];
    for (std::size_t j = 0; j < 3; ++j) a += p[s.w1 + i * 3 + j] * in[j];
    h1[i] = std::fmax(a, 0.0);
  }
  for (std::size_t i = 0; i < s.h2; ++i) {
    double a = p[s.b2 + i];
    for (std::size_t j = 0; j < s.h1; ++j) a += p[s.w2 + i * s.h1 + j] * h1[j];
    h2[i] = std::fmax(a, 0.0);
  }
  std::array<double, 4> out{};
  for (std::size_t i = 0; i < 4; ++i) {
    double a = p[s.b3 + i];
    for (std::size_t j = 0; j < s.h2; ++j) a += p[s.w3 + i * s.h2 + j] * h2[j];
    out[i] = a;
  }
  return {out[0], {out[1], out[2], out[3]}};
}

void Field::backward(const Vec3& p, double d_raw, const Vec3& d_logits, std::span<double> grad) const {
  if (grad.size() != params_.size()) {
    throw DomainError("Field::backward: gradient buffer has wrong size");
  }
  if (!bounds_.contains(p)) return;
  switch (kind_) {
    case FieldKind::Constant:
      grad[0] += d_raw;
      grad[1] += d_logits.x;
      grad[2] += d_logits.y;
      grad[3] += d_logits.z;
      return;
    case FieldKind::VoxelGrid:
      backward_voxel(to_unit(bounds_, p), d_raw, d_logits, grad);
      return;
    case FieldKind::TinyMlp:
      backward_mlp(to_unit(bounds_, p), d_raw, d_logits, grad);
      return;
  }
}

void Field::backward_voxel(const Vec3& u, double d_raw, const Vec3& d_logits, std::span<double> grad) const {
  const std::size_t r = metadata_[0];
  const std::size_t n = r * r * r;
  const Trilinear t = trilinear(r, u);
  for (int c = 0; c < 8; ++c) {
    const double w = t.weight[c];
    const std::size_t i = t.node[c];
    grad[i] += w * d_raw;
    grad[n + 3 * i] += w * d_logits.x;
    grad[n + 3 * i + 1] += w * d_logits.y;
    grad[n + 3 * i + 2] += w * d_logits.z;
  }
}

void Field::backward_mlp(const Vec3& u, double d_raw, const Vec3& d_logits, std::span<double> grad) const {
  const MlpShape s = mlp_shape(metadata_);
  const double* p = params_.data();
  const std::array<double, 3> in = {2.0 * u.x - 1.0, 2.0 * u.y - 1.0, 2.0 * u.z - 1.0};
  std::array<double, kMaxWidth> a1{}, h1{}, a2{}, h2{};
  for (std::size_t i = 0; i < s.h1; ++i) {
    double a = p[s.b1 + i];
    for (std::size_t j = 0; j < 3; ++j) a += p[s.w1 + i * 3 + j] * in[j];
    a1[i] = a;
    h1[i] = std::fmax(a, 0.0);
  }
  for (std::size_t i = 0; i < s.h2; ++i) {
    double a = p[s.b2 + i];
    for (std::size_t j = 0; j < s.h1; ++j) a += p[s.w2 + i * s.h1 + j] * h1[j];
    a2[i] = a;
    h2[i] = std::fmax(a, 0.0);
  }
  const std::array<double, 4> d_out = {d_raw, d_logits.x, d_logits.y, d_logits.z};

  std::array<double, kMaxWidth> d_h2{}, d_h1{};
  for (std::size_t i = 0; i < 4; ++i) {
    grad[s.b3 + i] += d_out[i];
    for (std::size_t j = 0; j < s.h2; ++j) {
      grad[s.w3 + i * s.h2 + j] += d_out[i] * h2[j];
      d_h2[j] += p[s.w3 + i * s.h2 + j] * d_out[i];
    }
  }
  for (std::size_t i = 0; i < s.h2; ++i) {
    const double g = a2[i] > 0.0 ? d_h2[i] : 0.0;
    if (g == 0.0) continue;
    grad[s.b2 + i] += g;
    for (std::size_t j = 0; j < s.h1; ++j) {
      grad[s.w2 + i * s.h1 + j] += g * h1[j];
      d_h1[j] += p[s.w2 + i * s.h1 + j] * g;
    }
  }
  for (std::size_t i = 0; i < s.h1; ++i) {
    const double g = a1[i] > 0.0 ? d_h1[i] : 0.0;
    if (g == 0.0) continue;
    grad[s.b1 + i] += g;
    for (std::size_t j = 0; j < 3; ++j) grad[s.w1 + i * 3 + j] += g * in[j];
  }
}

Field Field::with_scaled_bounds(double k) const {
  if (!std::isfinite(k) || !(k > 0.0)) {
    throw DomainError(fmt::format("with_scaled_bounds: k must be finite and > 0, got {}", k));
  }
  Field out = *this;
  out.bounds_ = bounds_.scaled(k);
  return out;
}

RawStats measure_raw_stats(const Field& field, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw DomainError("measure_raw_stats: n must be positive");
  const CounterRng rng(substream(seed, "raw-stats"));
  const Aabb& b = field.bounds();
  const Vec3 e = b.extent();
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 p{b.min.x + rng.uniform(i, 0) * e.x, b.min.y + rng.uniform(i, 1) * e.y,
                 b.min.z + rng.uniform(i, 2) * e.z};
    const double x = field.query(p).raw_density;
    sum += x;
    sum_sq += x * x;
  }
  const double mean = sum / static_cast<double>(n);
  const double var = std::fmax(sum_sq / static_cast<double>(n) - mean * mean, 0.0);
  return {mean, std::sqrt(var)};
}

Field init_field(FieldKind kind, std::vector<std::uint32_t> metadata, const Aabb& bounds, double tau_target,
                 std::uint64_t seed) {
  if (!std::isfinite(tau_target) || tau_target < 0.0) {
    throw DomainError(fmt::format("init_field: tau_target must be finite and >= 0, got {}", tau_target));
  }
  const std::size_t count = expected_param_count(kind, metadata);
  std::vector<double> params(count, 0.0);
  std::mt19937_64 gen(substream(seed, "field-init"));

  switch (kind) {
    case FieldKind::Constant:
      if (tau_target != 0.0) {
        throw DomainError("init_field: a constant field has zero spread; pass tau_target = 0");
      }
      return Field(kind, std::move(metadata), bounds, std::move(params));

    case FieldKind::VoxelGrid: {
      Field f(kind, std::move(metadata), bounds, std::move(params));
      if (tau_target == 0.0) return f;
      const std::size_t r = f.metadata()[0];
      auto dens = f.mutable_params().first(r * r * r);
      std::normal_distribution<double> normal(0.0, 1.0);
      for (double& v : dens) v = normal(gen);
      // Interpolation is affine with unit weight sum, so an affine map of the
      // node values maps the measured output statistics exactly.
      const RawStats st = measure_raw_stats(f, 100000, substream(seed, "calibrate"));
      const double gain = tau_target / st.stddev;
      for (double& v : dens) v = (v - st.mean) * gain;
      return f;
    }

    case FieldKind::TinyMlp: {
      const MlpShape s = mlp_shape(metadata);
      auto kaiming = [&](std::size_t offset, std::size_t rows, std::size_t fan_in, double gain) {
        const double bound = gain * std::sqrt(3.0 / static_cast<double>(fan_in));
        std::uniform_real_distribution<double> uni(-bound, bound);
        for (std::size_t i = 0; i < rows * fan_in; ++i) params[offset + i] = uni(gen);
      };
      kaiming(s.w1, s.h1, 3, std::sqrt(2.0));
      kaiming(s.w2, s.h2, s.h1, std::sqrt(2.0));
      kaiming(s.w3, 4, s.h2, 1.0);
      Field f(kind, std::move(metadata), bounds, std::move(params));
      auto p = f.mutable_params();
      if (tau_target == 0.0) {
        for (std::size_t j = 0; j < s.h2; ++j) p[s.w3 + j] = 0.0;
        p[s.b3] = 0.0;
        return f;
      }
      const RawStats st = measure_raw_stats(f, 100000, substream(seed, "calibrate"));
      if (!(st.stddev > 0.0)) {
        throw DomainError("init_field: MLP density head has zero output spread; reseed");
      }
      const double gain = tau_target / st.stddev;
      for (std::size_t j = 0; j < s.h2; ++j) p[s.w3 + j] *= gain;
      p[s.b3] = (p[s.b3] - st.mean) * gain;
      return f;
    }
  }
  throw DomainError("init_field: unknown field kind");
}

Field scale_field_density(const Field& field, double k, const ActivationConfig& act) {
  if (!std::isfinite(k) || !(k > 0.0)) {
    throw DomainError(fmt::format("scale_field_density: k must be finite and > 0, got {}", k));
  }
  if (act.kind != ActivationKind::Exp && act.kind != ActivationKind::ExpGumbel) {
    throw CapabilityError(fmt::format(
        "scale_field_density: no exact pre-activation transform scales sigma under {}", to_string(act.kind)));
  }
  Field out = field;
  if (k == 1.0) return out;
  const double shift = -std::log(k);
  auto p = out.mutable_params();
  switch (field.kind()) {
    case FieldKind::Constant:
      p[0] += shift;
      break;
    case FieldKind::VoxelGrid: {
      const std::size_t r = field.metadata()[0];
      for (double& v : p.first(r * r * r)) v += shift;
      break;
    }
    case FieldKind::TinyMlp:
      p[mlp_shape(field.metadata()).b3] += shift;
      break;
  }
  return out;
}

Field rescale_field(const Field& field, double k, const ActivationConfig& act) {
  return scale_field_density(field, k, act).with_scaled_bounds(k);
}

void write_checkpoint(const Field& field, std::ostream& out) {
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(field.kind()));
  const auto& m = field.metadata();
  const auto meta_bytes = static_cast<std::uint32_t>(4 + 4 * m.size() + 6 * 8);
  put<std::uint32_t>(out, meta_bytes);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(m.size()));
  for (std::uint32_t v : m) put<std::uint32_t>(out, v);
  const Aabb& b = field.bounds();
  for (double v : {b.min.x, b.min.y, b.min.z, b.max.x, b.max.y, b.max.z}) put<double>(out, v);
  for (double v : field.params()) put<double>(out, v);
  if (!out) throw DomainError("checkpoint: write failed");
}

Field read_checkpoint(std::istream& in) {
  std::array<char, 16> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw DomainError("checkpoint: bad magic");
  }
  const auto kind_raw = get<std::uint32_t>(in);
  if (kind_raw > 2) throw DomainError(fmt::format("checkpoint: unknown field kind {}", kind_raw));
  const auto kind = static_cast<FieldKind>(kind_raw);
  const auto meta_bytes = get<std::uint32_t>(in);
  const auto count = get<std::uint32_t>(in);
  if (count > 16 || meta_bytes != 4 + 4 * count + 48) {
    throw DomainError("checkpoint: inconsistent metadata length");
  }
  std::vector<std::uint32_t> m(count);
  for (auto& v : m) v = get<std::uint32_t>(in);
  std::array<double, 6> bb{};
  for (double& v : bb) v = get<double>(in);
  const std::size_t n = expected_param_count(kind, m);
  std::vector<double> params(n);
  for (double& v : params) v = get<double>(in);
  return Field(kind, std::move(m), Aabb{{bb[0], bb[1], bb[2]}, {bb[3], bb[4], bb[5]}}, std::move(params));
}

void save_checkpoint(const Field& field, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DomainError(fmt::format("checkpoint: cannot open '{}' for writing", path));
  write_checkpoint(field, out);
}

Field load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError(fmt::format("checkpoint: cannot open '{}'", path));
  return read_checkpoint(in);
}

}  // namespace alphainv
