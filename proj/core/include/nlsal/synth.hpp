#pragma once

#include <cstdint>

#include "nlsal/data_io.hpp"

namespace nlsal {

/// Seeded synthetic video: a bright square bouncing over a textured
/// background, with an exact binary mask. With `distractor`, each sequence
/// also shows a static square of identical appearance that never appears in
/// the ground truth, so only motion separates the two.
struct SynthSpec {
  int sequences = 1;
  int frames = 20;
  int size = 64;
  int square = 14;
  /// Per-frame displacement along each axis, in pixels.
  int motion = 4;
  bool distractor = false;
  std::uint64_t seed = 1;

  void validate() const;
};

VideoDataset synth_dataset(const SynthSpec& spec);

}  // namespace nlsal
