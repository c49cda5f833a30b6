#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "nlsal/tensor.hpp"

namespace nlsal {

/// Seeded generator shared by every stochastic component.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  /// Uniform integer in [lo, hi].
  int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
  std::uint64_t next() { return engine_(); }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

/// Seed for an independent stream keyed by `tag` (FNV-1a of the tag mixed
/// into `seed`), so e.g. a parameter's init depends only on its name.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag);

Tensor random_uniform(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0);

/// He-style fan-in scaled uniform: U(-sqrt(6/fan_in), sqrt(6/fan_in)).
Tensor he_uniform(Shape shape, double fan_in, Rng& rng);

}  // namespace nlsal
