#include "nlsal/maps.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace nlsal {

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(values.begin(), values.end(), std::uint8_t{1}));
}

ByteMap to_bytes(const SaliencyMap& map) {
  ByteMap out(map.height, map.width);
  for (std::size_t i = 0; i < map.values.size(); ++i) {
    const double v = std::clamp(std::round(255.0 * map.values[i]), 0.0, 255.0);
    out.values[i] = static_cast<std::uint8_t>(v);
  }
  return out;
}

SaliencyMap to_normalized(const ByteMap& map) {
  SaliencyMap out(map.height, map.width);
  for (std::size_t i = 0; i < map.values.size(); ++i) out.values[i] = map.values[i] / 255.0;
  return out;
}

ByteMap mask_to_bytes(const BinaryMask& mask) {
  ByteMap out(mask.height, mask.width);
  for (std::size_t i = 0; i < mask.values.size(); ++i) out.values[i] = mask.values[i] != 0 ? 255 : 0;
  return out;
}

SaliencyMap saliency_from_tensor(const Tensor& t) {
  const Shape& s = t.shape();
  if (s.n != 1 || s.c != 1) {
    throw ShapeError(fmt::format("saliency map needs a 1xHxWx1 tensor, got {}", s.str()));
  }
  SaliencyMap out(s.h, s.w);
  std::copy(t.data().begin(), t.data().end(), out.values.begin());
  return out;
}

Tensor tensor_from_saliency(const SaliencyMap& map) {
  return Tensor({1, map.height, map.width, 1}, map.values);
}

Tensor tensor_from_mask(const BinaryMask& mask) {
  Tensor t({1, mask.height, mask.width, 1});
  for (std::size_t i = 0; i < mask.values.size(); ++i) t[i] = mask.values[i];
  return t;
}

}  // namespace nlsal
