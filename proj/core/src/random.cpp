#include "nlsal/random.hpp"

#include <cmath>
#include <stdexcept>

namespace nlsal {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) {
  const std::uint64_t h = fnv1a64(tag);
  // splitmix64 finaliser over the combination
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

Tensor random_uniform(Shape shape, Rng& rng, double lo, double hi) {
  Tensor t(shape);
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

Tensor he_uniform(Shape shape, double fan_in, Rng& rng) {
  if (!(fan_in > 0.0)) throw std::invalid_argument("he_uniform: fan_in must be positive");
  const double bound = std::sqrt(6.0 / fan_in);
  return random_uniform(shape, rng, -bound, bound);
}

}  // namespace nlsal
