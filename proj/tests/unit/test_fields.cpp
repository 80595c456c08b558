#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <sstream>

#include <alphainv/error.hpp>
#include <alphainv/fields.hpp>

#include "oracles.hpp"

using namespace alphainv;

namespace {

const Aabb kBounds{{-1.5, -1.5, -1.5}, {1.5, 1.5, 1.5}};

Field random_field(FieldKind kind, std::vector<std::uint32_t> meta, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 0.5);
  std::vector<double> p(expected_param_count(kind, meta));
  for (double& v : p) v = n(rng);
  return Field(kind, std::move(meta), kBounds, std::move(p));
}

Vec3 random_point(std::mt19937_64& rng, const Aabb& b) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Vec3 e = b.extent();
  return {b.min.x + u(rng) * e.x, b.min.y + u(rng) * e.y, b.min.z + u(rng) * e.z};
}

double response_dot(const FieldResponse& r, double w_raw, const Vec3& w_logits) {
  return w_raw * r.raw_density + dot(w_logits, r.color_logits);
}

}  // namespace

TEST_SUITE("fields") {

TEST_CASE("parameter counts") {
  CHECK(expected_param_count(FieldKind::Constant, {}) == 4);
  const std::vector<std::uint32_t> r16{16};
  CHECK(expected_param_count(FieldKind::VoxelGrid, r16) == 4 * 16 * 16 * 16);
  const std::vector<std::uint32_t> mlp{3, 32, 32, 4};
  CHECK(expected_param_count(FieldKind::TinyMlp, mlp) == 32 * 3 + 32 + 32 * 32 + 32 + 4 * 32 + 4);
  const std::vector<std::uint32_t> bad_mlp{2, 32, 32, 4};
  CHECK_THROWS_AS(expected_param_count(FieldKind::TinyMlp, bad_mlp), DomainError);
  const std::vector<std::uint32_t> bad_grid{1};
  CHECK_THROWS_AS(expected_param_count(FieldKind::VoxelGrid, bad_grid), DomainError);
  CHECK_THROWS_AS(Field(FieldKind::Constant, {}, kBounds, {0.0}), DomainError);
  CHECK_THROWS_AS(Field(FieldKind::Constant, {}, Aabb{{0, 0, 0}, {1, 0, 1}}, {0, 0, 0, 0}), DomainError);
}

TEST_CASE("constant init") {
  const Field f = init_field(FieldKind::Constant, {}, kBounds, 0.0, 1);
  CHECK(f.params()[0] == 0.0);
  CHECK(measure_raw_stats(f, 1000, 2).stddev == 0.0);
  CHECK_THROWS_AS(init_field(FieldKind::Constant, {}, kBounds, 1.0, 1), DomainError);
}

TEST_CASE("voxel init reaches the requested spread") {
  const Field f = init_field(FieldKind::VoxelGrid, {16}, kBounds, 1.0, 7);
  const RawStats st = measure_raw_stats(f, 100000, 12345);
  CHECK(st.stddev >= 0.9);
  CHECK(st.stddev <= 1.1);
  CHECK(std::fabs(st.mean) <= 0.05);
}

TEST_CASE("mlp init is centred with the requested spread") {
  const Field f = init_field(FieldKind::TinyMlp, {3, 32, 32, 4}, kBounds, 1.0, 3);
  const RawStats st = measure_raw_stats(f, 100000, 999);
  CHECK(st.mean >= -0.05);
  CHECK(st.mean <= 0.05);
  CHECK(std::fabs(st.stddev - 1.0) <= 0.1);
  const Field zero = init_field(FieldKind::TinyMlp, {3, 32, 32, 4}, kBounds, 0.0, 3);
  CHECK(measure_raw_stats(zero, 1000, 1).stddev == 0.0);
}

TEST_CASE("init is deterministic in the seed") {
  CHECK(init_field(FieldKind::VoxelGrid, {8}, kBounds, 1.0, 5) == init_field(FieldKind::VoxelGrid, {8}, kBounds, 1.0, 5));
  CHECK_FALSE(init_field(FieldKind::VoxelGrid, {8}, kBounds, 1.0, 5) ==
              init_field(FieldKind::VoxelGrid, {8}, kBounds, 1.0, 6));
  CHECK(init_field(FieldKind::TinyMlp, {3, 8, 8, 4}, kBounds, 1.0, 5) ==
        init_field(FieldKind::TinyMlp, {3, 8, 8, 4}, kBounds, 1.0, 5));
}

TEST_CASE("voxel interpolation of constant corners") {
  std::vector<double> p(expected_param_count(FieldKind::VoxelGrid, std::vector<std::uint32_t>{4}), 0.0);
  for (std::size_t i = 0; i < 64; ++i) p[i] = 2.5;
  const Field f(FieldKind::VoxelGrid, {4}, kBounds, p);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) CHECK(f.query(random_point(rng, kBounds)).raw_density == doctest::Approx(2.5));
}

TEST_CASE("voxel nodes and cell centres") {
  const Field f = random_field(FieldKind::VoxelGrid, {5}, 2);
  const auto p = f.params();
  const double step = 3.0 / 4.0;
  auto node = [&](int i, int j, int k) { return p[static_cast<std::size_t>((k * 5 + j) * 5 + i)]; };
  CHECK(f.query({-1.5 + step, -1.5 + 2 * step, -1.5 + 3 * step}).raw_density == doctest::Approx(node(1, 2, 3)));
  CHECK(f.query({1.5, 1.5, 1.5}).raw_density == doctest::Approx(node(4, 4, 4)));
  const Vec3 center{-1.5 + 1.5 * step, -1.5 + 0.5 * step, -1.5 + 2.5 * step};
  double mean = 0.0;
  for (int dk = 0; dk < 2; ++dk)
    for (int dj = 0; dj < 2; ++dj)
      for (int di = 0; di < 2; ++di) mean += node(1 + di, 0 + dj, 2 + dk) / 8.0;
  CHECK(f.query(center).raw_density == doctest::Approx(mean).epsilon(1e-14));
}

TEST_CASE("out-of-bounds queries are empty space") {
  const Field f = random_field(FieldKind::VoxelGrid, {4}, 3);
  CHECK(f.query({1.6, 0, 0}).raw_density == -INFINITY);
  const Field m = random_field(FieldKind::TinyMlp, {3, 4, 4, 4}, 3);
  CHECK(m.query({0, 0, -2}).raw_density == -INFINITY);
}

TEST_CASE("voxel query is Lipschitz") {
  const Field f = random_field(FieldKind::VoxelGrid, {8}, 4);
  double max_abs = 0.0;
  for (double v : f.params()) max_abs = std::max(max_abs, std::fabs(v));
  const double C = 2.0 * max_abs * 7.0 / 3.0 * std::sqrt(3.0);
  std::mt19937_64 rng(5);
  const Aabb inner{{-1.4, -1.4, -1.4}, {1.4, 1.4, 1.4}};
  for (int i = 0; i < 1000; ++i) {
    const Vec3 p = random_point(rng, inner);
    const Vec3 eps{1e-6, -1e-6, 1e-6};
    const FieldResponse a = f.query(p), b = f.query(p + eps);
    CHECK(std::fabs(a.raw_density - b.raw_density) <= C * norm(eps));
    CHECK(max_abs_diff(a.color_logits, b.color_logits) <= C * norm(eps));
  }
}

TEST_CASE("voxel backward is the trilinear weight times upstream") {
  const Field f = random_field(FieldKind::VoxelGrid, {4}, 6);
  const Vec3 p{0.1, -0.4, 0.9};
  std::vector<double> g(f.num_params(), 0.0);
  f.backward(p, 2.0, Vec3{0, 0, 0}, g);
  for (std::size_t i = 0; i < 64; ++i) {
    std::vector<double> e(f.num_params(), 0.0);
    e[i] = 1.0;
    const Field unit(FieldKind::VoxelGrid, {4}, kBounds, e);
    CHECK(g[i] == doctest::Approx(2.0 * unit.query(p).raw_density).epsilon(1e-14));
  }
  std::vector<double> z(f.num_params(), 0.0);
  f.backward(p, 0.0, Vec3{}, z);
  for (double v : z) CHECK(v == 0.0);
}

TEST_CASE("backward accumulates additively") {
  const Field f = random_field(FieldKind::TinyMlp, {3, 6, 5, 4}, 7);
  std::vector<double> once(f.num_params(), 0.0), twice(f.num_params(), 0.0);
  const Vec3 p{0.2, 0.3, -0.1};
  f.backward(p, 0.7, Vec3{0.1, 0.2, 0.3}, once);
  f.backward(p, 0.7, Vec3{0.1, 0.2, 0.3}, twice);
  f.backward(p, 0.7, Vec3{0.1, 0.2, 0.3}, twice);
  for (std::size_t i = 0; i < once.size(); ++i) CHECK(twice[i] == doctest::Approx(2.0 * once[i]));
}

TEST_CASE("analytic parameter gradients match finite differences") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const std::vector<std::pair<FieldKind, std::vector<std::uint32_t>>> cases{
      {FieldKind::Constant, {}}, {FieldKind::VoxelGrid, {3}}, {FieldKind::TinyMlp, {3, 8, 6, 4}}};
  for (const auto& [kind, meta] : cases) {
    for (int trial = 0; trial < 5; ++trial) {
      const Field f = random_field(kind, meta, 100 + trial);
      const Vec3 p = random_point(rng, kBounds);
      const double w_raw = u(rng);
      const Vec3 w_logits{u(rng), u(rng), u(rng)};
      std::vector<double> g(f.num_params(), 0.0);
      f.backward(p, w_raw, w_logits, g);
      const double h = 1e-6;
      for (std::size_t i = 0; i < f.num_params(); ++i) {
        Field plus = f, minus = f;
        plus.mutable_params()[i] += h;
        minus.mutable_params()[i] -= h;
        const double fd = (response_dot(plus.query(p), w_raw, w_logits) - response_dot(minus.query(p), w_raw, w_logits)) /
                          (2.0 * h);
        if (std::fabs(fd) < 1e-9 && std::fabs(g[i]) < 1e-9) continue;
        CHECK(oracle::rel_err(g[i], fd, 1e-8) < 1e-5);
      }
    }
  }
}

TEST_CASE("density scaling for exp activations") {
  const ActivationConfig exp_act{ActivationKind::Exp, 0.3, 0.0};
  std::mt19937_64 rng(9);
  const std::vector<std::pair<FieldKind, std::vector<std::uint32_t>>> cases{
      {FieldKind::Constant, {}}, {FieldKind::VoxelGrid, {6}}, {FieldKind::TinyMlp, {3, 8, 8, 4}}};
  for (const auto& [kind, meta] : cases) {
    const Field f = random_field(kind, meta, 11);
    CHECK(scale_field_density(f, 1.0, exp_act) == f);
    const Field g = scale_field_density(f, 10.0, exp_act);
    for (int i = 0; i < 50; ++i) {
      const Vec3 p = random_point(rng, kBounds);
      const double s0 = sigma(exp_act, f.query(p).raw_density).value;
      const double s1 = sigma(exp_act, g.query(p).raw_density).value;
      CHECK(s1 == doctest::Approx(0.1 * s0).epsilon(1e-13));
      CHECK(max_abs_diff(f.query(p).color_logits, g.query(p).color_logits) == 0.0);
    }
  }
  const Field f = random_field(FieldKind::VoxelGrid, {4}, 1);
  CHECK_THROWS_AS(scale_field_density(f, 2.0, {ActivationKind::Relu, 0.0, 0.0}), CapabilityError);
  CHECK_THROWS_AS(scale_field_density(f, 2.0, {ActivationKind::Softplus, 0.0, 0.0}), CapabilityError);
  CHECK_THROWS_AS(scale_field_density(f, 0.0, exp_act), DomainError);
}

TEST_CASE("rescaled field answers at scaled positions") {
  const ActivationConfig act{ActivationKind::ExpGumbel, 0.0, 0.0};
  const Field f = random_field(FieldKind::VoxelGrid, {6}, 12);
  const Field g = rescale_field(f, 4.0, act);
  CHECK(g.bounds() == kBounds.scaled(4.0));
  std::mt19937_64 rng(13);
  for (int i = 0; i < 50; ++i) {
    const Vec3 p = random_point(rng, kBounds);
    CHECK(g.query(4.0 * p).raw_density == doctest::Approx(f.query(p).raw_density - std::log(4.0)).epsilon(1e-13));
  }
}

TEST_CASE("checkpoint round trip and layout") {
  const std::vector<std::pair<FieldKind, std::vector<std::uint32_t>>> cases{
      {FieldKind::Constant, {}}, {FieldKind::VoxelGrid, {5}}, {FieldKind::TinyMlp, {3, 7, 9, 4}}};
  for (const auto& [kind, meta] : cases) {
    const Field f = random_field(kind, meta, 14);
    std::stringstream ss;
    write_checkpoint(f, ss);
    const std::string blob = ss.str();
    CHECK(blob.compare(0, 16, std::string("ALPHAINV-FLD\0\0\0\0", 16)) == 0);
    const auto u32 = [&](std::size_t off) {
      std::uint32_t v = 0;
      for (int b = 3; b >= 0; --b) v = (v << 8) | static_cast<unsigned char>(blob[off + b]);
      return v;
    };
    CHECK(u32(16) == static_cast<std::uint32_t>(kind));
    const std::uint32_t meta_len = u32(20);
    CHECK(meta_len == 4 + 4 * meta.size() + 48);
    CHECK(u32(24) == meta.size());
    CHECK(blob.size() == 24 + meta_len + 8 * f.num_params());
    double first = 0.0;
    std::memcpy(&first, blob.data() + 24 + meta_len, 8);  // little-endian host
    CHECK(first == f.params()[0]);
    std::stringstream in(blob);
    CHECK(read_checkpoint(in) == f);
  }
}

TEST_CASE("corrupt checkpoints are rejected") {
  const Field f = random_field(FieldKind::VoxelGrid, {3}, 15);
  std::stringstream ss;
  write_checkpoint(f, ss);
  std::string blob = ss.str();
  std::string bad_magic = blob;
  bad_magic[0] = 'X';
  std::stringstream a(bad_magic);
  CHECK_THROWS_AS(read_checkpoint(a), DomainError);
  std::stringstream b(blob.substr(0, blob.size() - 5));
  CHECK_THROWS_AS(read_checkpoint(b), DomainError);
  std::string bad_kind = blob;
  bad_kind[16] = 9;
  std::stringstream c(bad_kind);
  CHECK_THROWS_AS(read_checkpoint(c), DomainError);
}

TEST_CASE("field kind names") {
  CHECK(parse_field_kind("voxel_grid") == FieldKind::VoxelGrid);
  CHECK(parse_field_kind("tiny_mlp") == FieldKind::TinyMlp);
  CHECK(parse_field_kind(to_string(FieldKind::Constant)) == FieldKind::Constant);
  CHECK_THROWS_AS(parse_field_kind("hashgrid"), DomainError);
}

}
