#include "nlsal/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <fmt/format.h>
#include <opencv2/imgproc.hpp>

#include "nlsal/data_io.hpp"
#include "nlsal/tensor.hpp"

namespace nlsal {

namespace {

void check_same_size(int h1, int w1, int h2, int w2, const char* what) {
  if (h1 != h2 || w1 != w2) throw ShapeError(fmt::format("{}: map {}x{} vs ground truth {}x{}", what, h1, w1, h2, w2));
}

struct Counts {
  double tp = 0;
  double fp = 0;
  double pos = 0;
  double neg = 0;
};

Counts count(const BinaryMask& m, const GroundTruth& g, const char* what) {
  check_same_size(m.height, m.width, g.height, g.width, what);
  Counts c;
  for (std::size_t i = 0; i < m.values.size(); ++i) {
    const bool gi = g.values[i] != 0;
    const bool mi = m.values[i] != 0;
    c.pos += gi;
    c.neg += !gi;
    c.tp += mi && gi;
    c.fp += mi && !gi;
  }
  return c;
}

double ratio(double num, double den) { return den > 0 ? num / den : 0.0; }

}  // namespace

BinaryMask binarize(const ByteMap& s, int t) {
  if (t < 0 || t > 255) throw std::invalid_argument(fmt::format("threshold {} outside 0..255", t));
  BinaryMask m(s.height, s.width);
  for (std::size_t i = 0; i < s.values.size(); ++i) m.values[i] = s.values[i] >= t ? 1 : 0;
  return m;
}

PrecisionRecall precision_recall(const BinaryMask& m, const GroundTruth& g) {
  const Counts c = count(m, g, "precision_recall");
  return {c.tp / (c.tp + c.fp + kPrecisionEps), ratio(c.tp, c.pos)};
}

double f_measure(double p, double r, double beta2) {
  const double den = beta2 * p + r;
  if (den <= 0.0) return 0.0;
  return (1.0 + beta2) * p * r / den;
}

RocPoint roc_point(const BinaryMask& m, const GroundTruth& g) {
  const Counts c = count(m, g, "roc_point");
  return {ratio(c.tp, c.pos), ratio(c.fp, c.neg)};
}

double auc(std::span<const RocPoint> curve) {
  std::vector<RocPoint> pts(curve.begin(), curve.end());
  pts.push_back({0.0, 0.0});
  pts.push_back({1.0, 1.0});
  std::sort(pts.begin(), pts.end(), [](const RocPoint& a, const RocPoint& b) {
    return a.fpr != b.fpr ? a.fpr < b.fpr : a.tpr < b.tpr;
  });
  double area = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    area += (pts[i].fpr - pts[i - 1].fpr) * (pts[i].tpr + pts[i - 1].tpr) * 0.5;
  }
  return area;
}

double mae(const SaliencyMap& s, const GroundTruth& g) {
  check_same_size(s.height, s.width, g.height, g.width, "mae");
  if (s.values.empty()) throw std::invalid_argument("mae: empty map");
  double acc = 0.0;
  for (std::size_t i = 0; i < s.values.size(); ++i) acc += std::abs(s.values[i] - (g.values[i] != 0 ? 1.0 : 0.0));
  return acc / static_cast<double>(s.values.size());
}

double mae(const ByteMap& s, const GroundTruth& g) { return mae(to_normalized(s), g); }

FrameCurves frame_curves(const ByteMap& s, const GroundTruth& g) {
  check_same_size(s.height, s.width, g.height, g.width, "frame_curves");
  std::array<double, kThresholds> fg{};
  std::array<double, kThresholds> bg{};
  for (std::size_t i = 0; i < s.values.size(); ++i) (g.values[i] != 0 ? fg : bg)[s.values[i]] += 1.0;

  FrameCurves out;
  double tp = 0.0;
  double fp = 0.0;
  double pos = 0.0;
  double neg = 0.0;
  for (int v = 0; v < kThresholds; ++v) {
    pos += fg[v];
    neg += bg[v];
  }
  for (int t = kThresholds - 1; t >= 0; --t) {
    tp += fg[t];
    fp += bg[t];
    out.precision[t] = tp / (tp + fp + kPrecisionEps);
    out.recall[t] = ratio(tp, pos);
    out.tpr[t] = out.recall[t];
    out.fpr[t] = ratio(fp, neg);
  }
  out.mae = mae(s, g);
  return out;
}

ByteMap resize_byte_map(const ByteMap& map, int height, int width) {
  if (height <= 0 || width <= 0) throw std::invalid_argument("resize_byte_map: non-positive size");
  cv::Mat src(map.height, map.width, CV_8UC1, const_cast<std::uint8_t*>(map.values.data()));
  cv::Mat dst;
  cv::resize(src, dst, cv::Size(width, height), 0, 0, cv::INTER_LINEAR);
  ByteMap out(height, width);
  for (int y = 0; y < height; ++y) {
    std::copy_n(dst.ptr<std::uint8_t>(y), width, out.values.begin() + static_cast<std::ptrdiff_t>(y) * width);
  }
  return out;
}

EvalReport evaluate_set(std::span<const ByteMap> maps, std::span<const GroundTruth> gts) {
  if (maps.size() != gts.size()) {
    throw std::invalid_argument(fmt::format("evaluate_set: {} maps vs {} ground truths", maps.size(), gts.size()));
  }
  if (maps.empty()) throw std::invalid_argument("evaluate_set: empty set");

  EvalReport r;
  r.frames = maps.size();
  for (std::size_t i = 0; i < maps.size(); ++i) {
    const GroundTruth& g = gts[i];
    FrameCurves c;
    if (maps[i].height != g.height || maps[i].width != g.width) {
      c = frame_curves(resize_byte_map(maps[i], g.height, g.width), g);
      ++r.resized;
    } else {
      c = frame_curves(maps[i], g);
    }
    for (int t = 0; t < kThresholds; ++t) {
      r.precision[t] += c.precision[t];
      r.recall[t] += c.recall[t];
      r.tpr[t] += c.tpr[t];
      r.fpr[t] += c.fpr[t];
    }
    r.mae += c.mae;
  }
  const double n = static_cast<double>(r.frames);
  std::vector<RocPoint> roc(kThresholds);
  double f_sum = 0.0;
  for (int t = 0; t < kThresholds; ++t) {
    r.precision[t] /= n;
    r.recall[t] /= n;
    r.tpr[t] /= n;
    r.fpr[t] /= n;
    r.f[t] = f_measure(r.precision[t], r.recall[t]);
    f_sum += r.f[t];
    if (r.f[t] > r.max_f) {
      r.max_f = r.f[t];
      r.max_f_threshold = t;
    }
    roc[t] = {r.tpr[t], r.fpr[t]};
  }
  r.avg_f = f_sum / kThresholds;
  r.auc = auc(roc);
  r.mae /= n;
  return r;
}

std::string format_summary(const EvalReport& report) {
  return fmt::format("frames {}\nresized {}\nmaxF   {:.5f} (threshold {})\navgF   {:.5f}\nAUC    {:.5f}\nMAE    {:.5f}\n",
                     report.frames, report.resized, report.max_f, report.max_f_threshold, report.avg_f, report.auc,
                     report.mae);
}

void write_report(const std::filesystem::path& dir, const EvalReport& report) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream out(dir / name);
    if (!out) throw DataError(fmt::format("'{}': cannot write", (dir / name).string()));
    return out;
  };
  open("summary.txt") << format_summary(report);
  auto pr = open("pr_curve.csv");
  pr << "threshold,precision,recall,F\n";
  for (int t = 0; t < kThresholds; ++t) {
    pr << fmt::format("{},{:.10f},{:.10f},{:.10f}\n", t, report.precision[t], report.recall[t], report.f[t]);
  }
  auto roc = open("roc_curve.csv");
  roc << "threshold,FPR,TPR\n";
  for (int t = 0; t < kThresholds; ++t) roc << fmt::format("{},{:.10f},{:.10f}\n", t, report.fpr[t], report.tpr[t]);
}

}  // namespace nlsal
