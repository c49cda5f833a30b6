#include "nlsal/synth.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

#include "nlsal/random.hpp"

namespace nlsal {

void SynthSpec::validate() const {
  if (size < 32) throw std::invalid_argument(fmt::format("synthetic frame size must be >= 32, got {}", size));
  if (sequences < 1 || frames < 1) throw std::invalid_argument("synthetic set needs >= 1 sequence and frame");
  if (square < 1 || square >= size) throw std::invalid_argument("square size must be in [1, size)");
  if (motion < 0) throw std::invalid_argument("motion must be >= 0");
}

namespace {

struct Square {
  int y = 0;
  int x = 0;
};

void bounce(int& pos, int& vel, int max_pos) {
  pos += vel;
  if (max_pos == 0) {
    pos = 0;
    return;
  }
  // Reflect until inside, for displacements larger than the free range.
  while (pos < 0 || pos > max_pos) {
    if (pos < 0) pos = -pos;
    if (pos > max_pos) pos = 2 * max_pos - pos;
    vel = -vel;
  }
}

}  // namespace

VideoDataset synth_dataset(const SynthSpec& spec) {
  spec.validate();
  VideoDataset data;
  const int n = spec.size;
  const int side = spec.square;
  const int max_pos = n - side;
  for (int s = 0; s < spec.sequences; ++s) {
    Rng rng(derive_seed(spec.seed, fmt::format("synth-seq{}", s)));
    double phase[3];
    double fx[3];
    double fy[3];
    double tint[3];
    for (int c = 0; c < 3; ++c) {
      phase[c] = rng.uniform(0.0, 2.0 * std::numbers::pi);
      fx[c] = rng.uniform(0.1, 0.5);
      fy[c] = rng.uniform(0.1, 0.5);
      tint[c] = rng.uniform(0.8, 1.0);
    }
    Square sq{rng.uniform_int(0, max_pos), rng.uniform_int(0, max_pos)};
    int vy = rng.uniform_int(0, 1) != 0 ? spec.motion : -spec.motion;
    int vx = rng.uniform_int(0, 1) != 0 ? spec.motion : -spec.motion;
    const Square distractor{rng.uniform_int(0, max_pos), rng.uniform_int(0, max_pos)};

    VideoSequence seq{fmt::format("synth{:02d}", s), {}, {}};
    for (int t = 0; t < spec.frames; ++t) {
      Tensor frame({1, n, n, 3});
      for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
          for (int c = 0; c < 3; ++c) {
            const double wave = 0.5 + 0.5 * std::sin(fx[c] * x + fy[c] * y + phase[c]);
            frame.at(0, y, x, c) = 0.10 + 0.20 * wave + rng.uniform(0.0, 0.06);
          }
        }
      }
      auto paint = [&](const Square& q) {
        for (int y = q.y; y < q.y + side; ++y) {
          for (int x = q.x; x < q.x + side; ++x) {
            for (int c = 0; c < 3; ++c) frame.at(0, y, x, c) = tint[c];
          }
        }
      };
      if (spec.distractor) paint(distractor);
      paint(sq);
      GroundTruth gt(n, n);
      for (int y = sq.y; y < sq.y + side; ++y) {
        for (int x = sq.x; x < sq.x + side; ++x) gt.values[static_cast<std::size_t>(y) * n + x] = 1;
      }
      seq.frames.push_back(std::move(frame));
      seq.groundtruth.emplace_back(std::move(gt));
      bounce(sq.y, vy, max_pos);
      bounce(sq.x, vx, max_pos);
    }
    data.sequences.push_back(std::move(seq));
  }
  return data;
}

}  // namespace nlsal
