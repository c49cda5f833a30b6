#include <cmath>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "nlsal/data_io.hpp"
#include "nlsal/metrics.hpp"
#include "nlsal/synth.hpp"
#include "oracles.hpp"

namespace nlsal {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

// Binary PGM (P5) or PPM (P6) with the given samples.
void write_pnm(const fs::path& path, int w, int h, int channels, const std::vector<int>& samples, int maxval = 255) {
  std::ofstream out(path, std::ios::binary);
  out << (channels == 1 ? "P5" : "P6") << "\n" << w << " " << h << "\n" << maxval << "\n";
  for (int v : samples) {
    if (maxval > 255) out.put(static_cast<char>(v >> 8));
    out.put(static_cast<char>(v & 0xff));
  }
}

void touch_image(const fs::path& path) {
  fs::create_directories(path.parent_path());
  write_pnm(path, 1, 1, 1, {0});
}

TEST(Frames, BlackImageIsZeroTensor) {
  const TempDir dir("io");
  write_pnm(dir / "black.ppm", 3, 2, 3, std::vector<int>(18, 0));
  const Tensor t = load_frame(dir / "black.ppm");
  EXPECT_EQ(t.shape(), (Shape{1, 2, 3, 3}));
  for (double v : t.data()) EXPECT_EQ(v, 0.0);
}

TEST(Frames, KnownBytesScaleBy255) {
  const TempDir dir("io");
  const std::vector<int> bytes{0, 51, 102, 153, 204, 255, 1, 2, 3, 250, 128, 127};
  write_pnm(dir / "k.ppm", 2, 2, 3, bytes);
  const Tensor t = load_frame(dir / "k.ppm");
  ASSERT_EQ(t.size(), bytes.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) EXPECT_DOUBLE_EQ(t[i], bytes[i] / 255.0);
}

TEST(Frames, SaveLoadRoundTripsBytes) {
  const TempDir dir("io");
  Tensor f = testing::random_tensor({1, 9, 7, 3}, 1, 0.0, 1.0);
  for (auto& v : f.data()) v = std::round(v * 255.0) / 255.0;
  save_frame(dir / "f.png", f);
  const Tensor back = load_frame(dir / "f.png");
  EXPECT_EQ(testing::max_abs_diff(back, f), 0.0);
  save_frame(dir / "g.png", back);
  EXPECT_EQ(testing::read_file(dir / "f.png"), testing::read_file(dir / "g.png"));
}

TEST(Frames, DeepOrMissingFileRejectedWithPath) {
  const TempDir dir("io");
  write_pnm(dir / "deep.pgm", 2, 2, 1, {0, 1000, 20000, 65535}, 65535);
  try {
    load_frame(dir / "deep.pgm");
    FAIL() << "16-bit image accepted";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("deep.pgm"), std::string::npos);
  }
  EXPECT_THROW(load_frame(dir / "absent.png"), DataError);
  std::ofstream(dir / "junk.png") << "not an image";
  EXPECT_THROW(load_frame(dir / "junk.png"), DataError);
}

TEST(GroundTruthIo, FlattenMultiLabel) {
  const TempDir dir("io");
  write_pnm(dir / "m.pgm", 3, 2, 1, {0, 37, 180, 0, 0, 37});
  const GroundTruth g = load_groundtruth(dir / "m.pgm", true);
  EXPECT_EQ(g.values, (std::vector<std::uint8_t>{0, 1, 1, 0, 0, 1}));
  // Without flattening only values >= 128 count.
  EXPECT_EQ(load_groundtruth(dir / "m.pgm", false).values, (std::vector<std::uint8_t>{0, 0, 1, 0, 0, 0}));
}

TEST(GroundTruthIo, ZeroAndBinaryMasks) {
  const TempDir dir("io");
  write_pnm(dir / "z.pgm", 2, 2, 1, {0, 0, 0, 0});
  EXPECT_EQ(load_groundtruth(dir / "z.pgm", true).count(), 0u);
  write_pnm(dir / "b.pgm", 2, 2, 1, {0, 255, 255, 0});
  EXPECT_EQ(load_groundtruth(dir / "b.pgm", false).values, (std::vector<std::uint8_t>{0, 1, 1, 0}));
  BinaryMask m(3, 3);
  m.values[4] = 1;
  save_mask(dir / "m.png", m);
  EXPECT_EQ(load_groundtruth(dir / "m.png", false), m);
}

TEST(Pairs, BoundaryRule) {
  using P = std::pair<std::size_t, std::size_t>;
  EXPECT_EQ(consecutive_indices(1), (std::vector<P>{{0, 0}}));
  EXPECT_EQ(consecutive_indices(3), (std::vector<P>{{0, 1}, {1, 2}, {2, 2}}));
  EXPECT_THROW(consecutive_indices(0), DataError);
  EXPECT_THROW(pair_consecutive(SequenceRecord{"empty", {}}), DataError);
}

TEST(Pairs, NumericOrderNotLexicographic) {
  const TempDir dir("io");
  for (const char* name : {"00010.png", "00009.png", "00011.png", "frame_2.png"}) touch_image(dir / "seq" / name);
  const auto files = list_images(dir / "seq");
  ASSERT_EQ(files.size(), 4u);
  EXPECT_EQ(files[0].filename(), "frame_2.png");
  EXPECT_EQ(files[1].filename(), "00009.png");
  EXPECT_EQ(files[2].filename(), "00010.png");
  const auto pairs = pair_consecutive(scan_sequence("seq", dir / "seq", std::nullopt));
  ASSERT_EQ(pairs.size(), 4u);
  EXPECT_EQ(pairs[1].frame_t.filename(), "00009.png");
  EXPECT_EQ(pairs[1].frame_next.filename(), "00010.png");
  EXPECT_EQ(pairs[3].frame_next.filename(), "00011.png");
}

TEST(Dataset, ScanMatchesGroundTruthByIndex) {
  const TempDir dir("io");
  for (const char* f : {"b/frames/1.png", "b/frames/2.png", "b/gt/2.png", "a/frames/img_07.png", "a/gt/07.png"}) {
    touch_image(dir / f);
  }
  const FrameSet set = scan_dataset(dir.path());
  ASSERT_EQ(set.sequences.size(), 2u);
  EXPECT_EQ(set.sequences[0].id, "a");
  EXPECT_TRUE(set.sequences[0].frames[0].groundtruth.has_value());
  EXPECT_FALSE(set.sequences[1].frames[0].groundtruth.has_value());
  EXPECT_TRUE(set.sequences[1].frames[1].groundtruth.has_value());
  EXPECT_EQ(set.frame_count(), 3u);
  EXPECT_EQ(set.annotated_count(), 2u);
  EXPECT_THROW(scan_dataset(dir / "missing"), DataError);
}

TEST(Manifest, RoundTrip) {
  const TempDir dir("io");
  for (const char* f : {"s1/frames/0.png", "s1/frames/1.png", "s1/gt/1.png", "s2/frames/5.png"}) touch_image(dir / f);
  const FrameSet set = scan_dataset(dir.path());
  std::stringstream ss;
  write_manifest(ss, set);
  EXPECT_EQ(read_manifest(ss), set);
  std::istringstream bad("only\ttwo\n");
  EXPECT_THROW(read_manifest(bad), DataError);
}

TEST(Synth, SeededAndExact) {
  SynthSpec spec;
  spec.frames = 5;
  spec.seed = 42;
  const VideoDataset a = synth_dataset(spec);
  const VideoDataset b = synth_dataset(spec);
  for (std::size_t t = 0; t < 5; ++t) {
    EXPECT_EQ(testing::max_abs_diff(a.sequences[0].frames[t], b.sequences[0].frames[t]), 0.0);
    const GroundTruth& g = *a.sequences[0].groundtruth[t];
    EXPECT_EQ(g, *b.sequences[0].groundtruth[t]);
    EXPECT_EQ(mae(mask_to_bytes(g), g), 0.0);
    EXPECT_EQ(g.count(), static_cast<std::size_t>(spec.square * spec.square));
    const Tensor& f = a.sequences[0].frames[t];
    for (int y = 0; y < spec.size; ++y)
      for (int x = 0; x < spec.size; ++x) {
        EXPECT_EQ(f.at(0, y, x, 0) >= 0.8, g.values[static_cast<std::size_t>(y) * spec.size + x] == 1);
      }
  }
  spec.seed = 43;
  EXPECT_GT(testing::max_abs_diff(synth_dataset(spec).sequences[0].frames[0], a.sequences[0].frames[0]), 0.0);
}

TEST(Synth, WriteThenLoadReproducesDataset) {
  const TempDir dir("io");
  SynthSpec spec;
  spec.sequences = 2;
  spec.frames = 3;
  const VideoDataset data = synth_dataset(spec);
  const FrameSet set = write_dataset(data, dir.path());
  EXPECT_EQ(scan_dataset(dir.path()), set);
  const VideoDataset back = load_dataset(set, 0, 0, false);
  ASSERT_EQ(back.frame_count(), 6u);
  for (std::size_t s = 0; s < 2; ++s)
    for (std::size_t t = 0; t < 3; ++t) {
      EXPECT_LE(testing::max_abs_diff(back.sequences[s].frames[t], data.sequences[s].frames[t]), 0.5 / 255.0 + 1e-12);
      EXPECT_EQ(*back.sequences[s].groundtruth[t], *data.sequences[s].groundtruth[t]);
    }
}

}  // namespace
}  // namespace nlsal
