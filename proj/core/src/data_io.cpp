#include "nlsal/data_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace nlsal {

namespace fs = std::filesystem;

namespace {

cv::Mat read_8bit(const fs::path& path) {
  if (!fs::exists(path)) throw DataError(fmt::format("'{}': no such file", path.string()));
  cv::Mat img = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (img.empty()) throw DataError(fmt::format("'{}': unreadable image", path.string()));
  if (img.depth() != CV_8U) {
    throw DataError(fmt::format("'{}': expected 8-bit samples, found a deeper image", path.string()));
  }
  return img;
}

void write_image(const fs::path& path, const cv::Mat& img) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), img)) throw DataError(fmt::format("'{}': cannot write image", path.string()));
}

}  // namespace

Tensor load_frame(const fs::path& path) {
  cv::Mat img = read_8bit(path);
  cv::Mat rgb;
  switch (img.channels()) {
    case 1: cv::cvtColor(img, rgb, cv::COLOR_GRAY2RGB); break;
    case 3: cv::cvtColor(img, rgb, cv::COLOR_BGR2RGB); break;
    case 4: cv::cvtColor(img, rgb, cv::COLOR_BGRA2RGB); break;
    default: throw DataError(fmt::format("'{}': unsupported channel count {}", path.string(), img.channels()));
  }
  Tensor out({1, rgb.rows, rgb.cols, 3});
  for (int y = 0; y < rgb.rows; ++y) {
    const auto* row = rgb.ptr<std::uint8_t>(y);
    for (int x = 0; x < rgb.cols * 3; ++x) out[static_cast<std::size_t>(y) * rgb.cols * 3 + x] = row[x] / 255.0;
  }
  return out;
}

void save_frame(const fs::path& path, const Tensor& frame) {
  const Shape& s = frame.shape();
  if (s.n != 1 || s.c != 3) throw ShapeError(fmt::format("save_frame needs 1xHxWx3, got {}", s.str()));
  cv::Mat rgb(s.h, s.w, CV_8UC3);
  for (int y = 0; y < s.h; ++y) {
    auto* row = rgb.ptr<std::uint8_t>(y);
    for (int x = 0; x < s.w * 3; ++x) {
      const double v = frame[static_cast<std::size_t>(y) * s.w * 3 + x];
      row[x] = static_cast<std::uint8_t>(std::clamp(std::round(255.0 * v), 0.0, 255.0));
    }
  }
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  write_image(path, bgr);
}

GroundTruth load_groundtruth(const fs::path& path, bool flatten) {
  cv::Mat img = read_8bit(path);
  GroundTruth gt(img.rows, img.cols);
  const int ch = img.channels();
  if (flatten) {
    for (int y = 0; y < img.rows; ++y) {
      const auto* row = img.ptr<std::uint8_t>(y);
      for (int x = 0; x < img.cols; ++x) {
        bool fg = false;
        for (int c = 0; c < ch; ++c) fg = fg || row[x * ch + c] != 0;
        gt.values[static_cast<std::size_t>(y) * img.cols + x] = fg ? 1 : 0;
      }
    }
    return gt;
  }
  cv::Mat gray = img;
  if (ch == 3) cv::cvtColor(img, gray, cv::COLOR_BGR2GRAY);
  if (ch == 4) cv::cvtColor(img, gray, cv::COLOR_BGRA2GRAY);
  for (int y = 0; y < gray.rows; ++y) {
    const auto* row = gray.ptr<std::uint8_t>(y);
    for (int x = 0; x < gray.cols; ++x) gt.values[static_cast<std::size_t>(y) * gray.cols + x] = row[x] >= 128 ? 1 : 0;
  }
  return gt;
}

void save_mask(const fs::path& path, const BinaryMask& mask) { save_byte_map(path, mask_to_bytes(mask)); }

ByteMap load_byte_map(const fs::path& path) {
  cv::Mat img = read_8bit(path);
  cv::Mat gray = img;
  if (img.channels() == 3) cv::cvtColor(img, gray, cv::COLOR_BGR2GRAY);
  if (img.channels() == 4) cv::cvtColor(img, gray, cv::COLOR_BGRA2GRAY);
  ByteMap out(gray.rows, gray.cols);
  for (int y = 0; y < gray.rows; ++y) {
    const auto* row = gray.ptr<std::uint8_t>(y);
    std::copy_n(row, gray.cols, &out.values[static_cast<std::size_t>(y) * gray.cols]);
  }
  return out;
}

void save_byte_map(const fs::path& path, const ByteMap& map) {
  cv::Mat img(map.height, map.width, CV_8UC1);
  for (int y = 0; y < map.height; ++y) {
    std::copy_n(&map.values[static_cast<std::size_t>(y) * map.width], map.width, img.ptr<std::uint8_t>(y));
  }
  write_image(path, img);
}

Tensor resize_frame(const Tensor& frame, int height, int width) {
  const Shape& s = frame.shape();
  if (s.n != 1) throw ShapeError(fmt::format("resize_frame needs batch 1, got {}", s.str()));
  if (s.h == height && s.w == width) return frame;
  cv::Mat src(s.h, s.w, CV_64FC(s.c), const_cast<double*>(frame.data().data()));
  cv::Mat dst;
  cv::resize(src, dst, cv::Size(width, height), 0, 0, cv::INTER_LINEAR);
  Tensor out({1, height, width, s.c});
  for (int y = 0; y < height; ++y) {
    std::copy_n(dst.ptr<double>(y), static_cast<std::size_t>(width) * s.c,
                &out[static_cast<std::size_t>(y) * width * s.c]);
  }
  return out;
}

GroundTruth resize_mask(const GroundTruth& mask, int height, int width) {
  if (mask.height == height && mask.width == width) return mask;
  cv::Mat src(mask.height, mask.width, CV_8UC1, const_cast<std::uint8_t*>(mask.values.data()));
  cv::Mat dst;
  cv::resize(src, dst, cv::Size(width, height), 0, 0, cv::INTER_NEAREST);
  GroundTruth out(height, width);
  for (int y = 0; y < height; ++y) {
    std::copy_n(dst.ptr<std::uint8_t>(y), width, &out.values[static_cast<std::size_t>(y) * width]);
  }
  return out;
}

bool is_image_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".ppm" || ext == ".pgm";
}

std::optional<long> numeric_index(const fs::path& path) {
  const std::string stem = path.stem().string();
  std::size_t end = stem.size();
  std::size_t begin = end;
  while (begin > 0 && std::isdigit(static_cast<unsigned char>(stem[begin - 1]))) --begin;
  if (begin == end) return std::nullopt;
  return std::stol(stem.substr(begin, std::min<std::size_t>(end - begin, 18)));
}

std::vector<fs::path> list_images(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError(fmt::format("'{}': not a directory", dir.string()));
  std::vector<std::pair<long, fs::path>> found;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || !is_image_file(entry.path())) continue;
    const auto idx = numeric_index(entry.path());
    if (!idx) throw DataError(fmt::format("'{}': file name has no numeric index", entry.path().string()));
    found.emplace_back(*idx, entry.path());
  }
  std::sort(found.begin(), found.end());
  for (std::size_t i = 1; i < found.size(); ++i) {
    if (found[i].first == found[i - 1].first) {
      throw DataError(fmt::format("'{}' and '{}' share numeric index {}", found[i - 1].second.string(),
                                  found[i].second.string(), found[i].first));
    }
  }
  std::vector<fs::path> out;
  out.reserve(found.size());
  for (auto& [idx, p] : found) out.push_back(std::move(p));
  return out;
}

std::size_t FrameSet::frame_count() const {
  std::size_t n = 0;
  for (const auto& s : sequences) n += s.frames.size();
  return n;
}

std::size_t FrameSet::annotated_count() const {
  std::size_t n = 0;
  for (const auto& s : sequences) {
    for (const auto& f : s.frames) n += f.groundtruth.has_value() ? 1 : 0;
  }
  return n;
}

SequenceRecord scan_sequence(const std::string& id, const fs::path& frames_dir,
                             const std::optional<fs::path>& gt_dir) {
  SequenceRecord seq{id, {}};
  std::map<long, fs::path> gts;
  if (gt_dir && fs::is_directory(*gt_dir)) {
    for (auto& p : list_images(*gt_dir)) gts.emplace(*numeric_index(p), std::move(p));
  }
  for (auto& p : list_images(frames_dir)) {
    FrameRecord rec{p, std::nullopt};
    if (const auto it = gts.find(*numeric_index(p)); it != gts.end()) rec.groundtruth = it->second;
    seq.frames.push_back(std::move(rec));
  }
  return seq;
}

FrameSet scan_dataset(const fs::path& root) {
  if (!fs::is_directory(root)) throw DataError(fmt::format("'{}': dataset root is not a directory", root.string()));
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory() && fs::is_directory(entry.path() / "frames")) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  FrameSet set;
  for (const auto& d : dirs) {
    set.sequences.push_back(scan_sequence(d.filename().string(), d / "frames", d / "gt"));
  }
  if (set.sequences.empty()) {
    throw DataError(fmt::format("'{}': no <sequence>/frames directories found", root.string()));
  }
  return set;
}

std::vector<std::pair<std::size_t, std::size_t>> consecutive_indices(std::size_t frames) {
  if (frames == 0) throw DataError("cannot pair an empty sequence");
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(frames);
  for (std::size_t t = 0; t < frames; ++t) out.emplace_back(t, std::min(t + 1, frames - 1));
  return out;
}

std::vector<FramePair> pair_consecutive(const SequenceRecord& sequence) {
  if (sequence.frames.empty()) throw DataError(fmt::format("sequence '{}' is empty", sequence.id));
  std::vector<FramePair> out;
  for (const auto& [t, next] : consecutive_indices(sequence.frames.size())) {
    out.push_back({sequence.id, sequence.frames[t].frame, sequence.frames[next].frame,
                   sequence.frames[t].groundtruth});
  }
  return out;
}

std::vector<FramePair> pair_consecutive(const FrameSet& set) {
  std::vector<FramePair> out;
  for (const auto& s : set.sequences) {
    auto pairs = pair_consecutive(s);
    out.insert(out.end(), pairs.begin(), pairs.end());
  }
  return out;
}

void write_manifest(std::ostream& out, const FrameSet& set) {
  for (const auto& p : pair_consecutive(set)) {
    out << p.sequence << '\t' << p.frame_t.string() << '\t' << p.frame_next.string() << '\t'
        << (p.groundtruth ? p.groundtruth->string() : std::string("-")) << '\n';
  }
}

FrameSet read_manifest(std::istream& in) {
  FrameSet set;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, '\t')) fields.push_back(field);
    if (fields.size() != 4) {
      throw DataError(fmt::format("manifest line {}: expected 4 tab-separated fields, got {}", line_no, fields.size()));
    }
    if (set.sequences.empty() || set.sequences.back().id != fields[0]) set.sequences.push_back({fields[0], {}});
    FrameRecord rec{fields[1], std::nullopt};
    if (fields[3] != "-") rec.groundtruth = fs::path(fields[3]);
    set.sequences.back().frames.push_back(std::move(rec));
  }
  return set;
}

void write_manifest(const fs::path& path, const FrameSet& set) {
  std::ofstream out(path);
  if (!out) throw DataError(fmt::format("'{}': cannot write manifest", path.string()));
  write_manifest(out, set);
}

FrameSet read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("'{}': cannot read manifest", path.string()));
  return read_manifest(in);
}

std::size_t VideoDataset::frame_count() const {
  std::size_t n = 0;
  for (const auto& s : sequences) n += s.frames.size();
  return n;
}

VideoDataset load_dataset(const FrameSet& set, int height, int width, bool flatten_gt) {
  VideoDataset data;
  for (const auto& seq : set.sequences) {
    VideoSequence vs{seq.id, {}, {}};
    for (const auto& rec : seq.frames) {
      Tensor frame = load_frame(rec.frame);
      if (height > 0 && width > 0) frame = resize_frame(frame, height, width);
      std::optional<GroundTruth> gt;
      if (rec.groundtruth) {
        gt = load_groundtruth(*rec.groundtruth, flatten_gt);
        gt = resize_mask(*gt, frame.shape().h, frame.shape().w);
      }
      vs.frames.push_back(std::move(frame));
      vs.groundtruth.push_back(std::move(gt));
    }
    data.sequences.push_back(std::move(vs));
  }
  return data;
}

FrameSet write_dataset(const VideoDataset& data, const fs::path& root) {
  FrameSet set;
  for (const auto& seq : data.sequences) {
    SequenceRecord rec{seq.id, {}};
    for (std::size_t t = 0; t < seq.frames.size(); ++t) {
      const std::string stem = fmt::format("{:05d}.png", t);
      FrameRecord fr{root / seq.id / "frames" / stem, std::nullopt};
      save_frame(fr.frame, seq.frames[t]);
      if (t < seq.groundtruth.size() && seq.groundtruth[t]) {
        fr.groundtruth = root / seq.id / "gt" / stem;
        save_mask(*fr.groundtruth, *seq.groundtruth[t]);
      }
      rec.frames.push_back(std::move(fr));
    }
    set.sequences.push_back(std::move(rec));
  }
  return set;
}

}  // namespace nlsal
