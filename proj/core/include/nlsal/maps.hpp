#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "nlsal/tensor.hpp"

namespace nlsal {

/// Binary h x w mask with values in {0, 1}. Used for ground truth and for
/// binarised saliency maps alike.
struct BinaryMask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> values;

  BinaryMask() = default;
  BinaryMask(int h, int w, std::uint8_t fill = 0)
      : height(h), width(w), values(static_cast<std::size_t>(h) * w, fill) {}

  [[nodiscard]] std::size_t count() const;
  [[nodiscard]] std::size_t size() const { return values.size(); }
  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;
};

using GroundTruth = BinaryMask;

/// Saliency map in file form: one byte per pixel, 0..255.
struct ByteMap {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> values;

  ByteMap() = default;
  ByteMap(int h, int w, std::uint8_t fill = 0)
      : height(h), width(w), values(static_cast<std::size_t>(h) * w, fill) {}
  friend bool operator==(const ByteMap&, const ByteMap&) = default;
};

/// Saliency map in normalised form: doubles in [0, 1].
struct SaliencyMap {
  int height = 0;
  int width = 0;
  std::vector<double> values;

  SaliencyMap() = default;
  SaliencyMap(int h, int w, double fill = 0.0)
      : height(h), width(w), values(static_cast<std::size_t>(h) * w, fill) {}
};

/// round(255 * s), clamped to the byte range.
ByteMap to_bytes(const SaliencyMap& map);
/// byte / 255.
SaliencyMap to_normalized(const ByteMap& map);
/// Ground truth scaled to 0 / 255, i.e. a perfect byte predictor.
ByteMap mask_to_bytes(const BinaryMask& mask);

/// Single-channel {1, h, w, 1} tensor <-> map.
SaliencyMap saliency_from_tensor(const Tensor& t);
Tensor tensor_from_saliency(const SaliencyMap& map);
Tensor tensor_from_mask(const BinaryMask& mask);

}  // namespace nlsal
