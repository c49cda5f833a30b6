#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nlsal/maps.hpp"
#include "nlsal/tensor.hpp"

namespace nlsal {

/// Unreadable, missing or malformed input data. Messages carry the path.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---- images -------------------------------------------------------------

/// 8-bit RGB (PNG or PPM) -> {1, h, w, 3} in [0, 1]. Grayscale images are
/// replicated to three channels; an alpha channel is dropped.
Tensor load_frame(const std::filesystem::path& path);
/// Inverse of load_frame: bytes = round(255 * v), clamped.
void save_frame(const std::filesystem::path& path, const Tensor& frame);

/// flatten = true: every nonzero label becomes foreground (multi-object
/// annotations collapsed to one mask). flatten = false: foreground iff the
/// gray value is >= 128.
GroundTruth load_groundtruth(const std::filesystem::path& path, bool flatten);
void save_mask(const std::filesystem::path& path, const BinaryMask& mask);

ByteMap load_byte_map(const std::filesystem::path& path);
void save_byte_map(const std::filesystem::path& path, const ByteMap& map);

Tensor resize_frame(const Tensor& frame, int height, int width);
GroundTruth resize_mask(const GroundTruth& mask, int height, int width);

/// .png, .ppm or .pgm (any case).
bool is_image_file(const std::filesystem::path& path);

/// Trailing decimal digits of the file stem ("frame_00012" -> 12).
std::optional<long> numeric_index(const std::filesystem::path& path);

/// Image files (png/ppm/pgm) of `dir` sorted by numeric_index.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

// ---- frame sets ---------------------------------------------------------

struct FrameRecord {
  std::filesystem::path frame;
  std::optional<std::filesystem::path> groundtruth;
  friend bool operator==(const FrameRecord&, const FrameRecord&) = default;
};

struct SequenceRecord {
  std::string id;
  std::vector<FrameRecord> frames;
  friend bool operator==(const SequenceRecord&, const SequenceRecord&) = default;
};

struct FrameSet {
  std::vector<SequenceRecord> sequences;
  [[nodiscard]] std::size_t frame_count() const;
  [[nodiscard]] std::size_t annotated_count() const;
  friend bool operator==(const FrameSet&, const FrameSet&) = default;
};

/// One sequence from a frame directory and an optional ground-truth
/// directory; files are matched on numeric_index.
SequenceRecord scan_sequence(const std::string& id, const std::filesystem::path& frames_dir,
                             const std::optional<std::filesystem::path>& gt_dir);

/// `<root>/<sequence>/frames/*` with optional `<root>/<sequence>/gt/*`.
/// Sequences are ordered by name.
FrameSet scan_dataset(const std::filesystem::path& root);

struct FramePair {
  std::string sequence;
  std::filesystem::path frame_t;
  std::filesystem::path frame_next;
  std::optional<std::filesystem::path> groundtruth;
  friend bool operator==(const FramePair&, const FramePair&) = default;
};

/// (t, t+1) index pairs for an n-frame sequence; the last frame pairs with
/// itself, so n frames give n pairs.
std::vector<std::pair<std::size_t, std::size_t>> consecutive_indices(std::size_t frames);

std::vector<FramePair> pair_consecutive(const SequenceRecord& sequence);
std::vector<FramePair> pair_consecutive(const FrameSet& set);

/// Manifest: one line per frame, `seq_id<TAB>frame_t<TAB>frame_t1<TAB>gt|-`.
void write_manifest(std::ostream& out, const FrameSet& set);
FrameSet read_manifest(std::istream& in);
void write_manifest(const std::filesystem::path& path, const FrameSet& set);
FrameSet read_manifest(const std::filesystem::path& path);

// ---- in-memory datasets -------------------------------------------------

struct VideoSequence {
  std::string id;
  std::vector<Tensor> frames;                       // {1, h, w, 3}
  std::vector<std::optional<GroundTruth>> groundtruth;  // parallel to frames
};

struct VideoDataset {
  std::vector<VideoSequence> sequences;
  [[nodiscard]] std::size_t frame_count() const;
};

/// Loads every frame of `set`, resized to height x width (bilinear for
/// frames, nearest for masks). Zero extents keep the native size.
VideoDataset load_dataset(const FrameSet& set, int height, int width, bool flatten_gt);

/// Writes `data` in the directory convention read by scan_dataset
/// (PNG frames, 0/255 PNG masks, five-digit numeric stems).
FrameSet write_dataset(const VideoDataset& data, const std::filesystem::path& root);

}  // namespace nlsal
