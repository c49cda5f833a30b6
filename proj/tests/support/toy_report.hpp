#pragma once

// Three hand-built frames and their report, computed with exact rationals by
// tests/oracles/three_frame_report.py and frozen here.

#include <array>
#include <vector>

#include "nlsal/maps.hpp"

namespace nlsal::toy {

struct ToySet {
  std::vector<ByteMap> maps;
  std::vector<GroundTruth> gts;
};

inline ToySet three_frame_set() {
  ToySet set;
  auto add = [&](int h, int w, std::vector<std::uint8_t> s, std::vector<std::uint8_t> g) {
    ByteMap m(h, w);
    m.values = std::move(s);
    GroundTruth t(h, w);
    t.values = std::move(g);
    set.maps.push_back(std::move(m));
    set.gts.push_back(std::move(t));
  };
  add(4, 4, {250, 200, 10, 0, 180, 128, 40, 5, 90, 128, 127, 60, 0, 30, 255, 220},
      {1, 1, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 1});
  // No foreground at all: recall and TPR are 0 at every threshold.
  add(3, 5, {0, 64, 128, 192, 255, 17, 34, 51, 68, 85, 200, 200, 200, 3, 3},
      {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0});
  add(2, 6, {255, 254, 1, 0, 100, 101, 99, 150, 150, 149, 7, 8}, {1, 1, 0, 0, 1, 0, 0, 1, 1, 0, 0, 1});
  return set;
}

inline constexpr double kMaxF = 0.619047618052721;
inline constexpr int kMaxFThreshold = 150;
inline constexpr double kAvgF = 0.489666788594687;
inline constexpr double kAuc = 0.575000000000000;
inline constexpr double kMae = 0.300680827886710;

struct CurveSample {
  int threshold;
  double precision;
  double recall;
  double f;
  double fpr;
};

inline constexpr std::array<CurveSample, 6> kSamples{{
    {0, 0.291666666449653, 0.666666666666667, 0.335174953739032, 1.000000000000000},
    {1, 0.324675324407995, 0.666666666666667, 0.368271954409649, 0.855555555555556},
    {100, 0.488095237442602, 0.611111111111111, 0.511873580729515, 0.311111111111111},
    {128, 0.552380951439456, 0.555555555555556, 0.553110327912356, 0.222222222222222},
    {200, 0.666666664166667, 0.333333333333333, 0.541666665397135, 0.088888888888889},
    {255, 0.666666660000000, 0.111111111111111, 0.309523808418367, 0.022222222222222},
}};

}  // namespace nlsal::toy
