#pragma once

#include <cstdint>
#include <string_view>

namespace alphainv {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of a named sub-stream ("field-init", "sampler", "batch", ...) of a run seed.
constexpr std::uint64_t substream(std::uint64_t seed, std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return mix64(seed ^ mix64(h));
}

/// Stateless counter-based generator: every draw is a pure function of its key.
class CounterRng {
 public:
  explicit constexpr CounterRng(std::uint64_t seed) : seed_(seed) {}

  constexpr std::uint64_t bits(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) const {
    return mix64(mix64(mix64(seed_ ^ a) ^ b) ^ c);
  }

  /// Uniform in the open interval (0, 1).
  constexpr double uniform(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) const {
    return (static_cast<double>(bits(a, b, c) >> 11) + 0.5) * 0x1.0p-53;
  }

 private:
  std::uint64_t seed_;
};

}  // namespace alphainv
