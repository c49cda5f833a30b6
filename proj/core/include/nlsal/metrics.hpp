#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "nlsal/maps.hpp"

namespace nlsal {

inline constexpr int kThresholds = 256;
inline constexpr double kFBeta2 = 0.3;
inline constexpr double kPrecisionEps = 1e-8;

/// M(i,j) = 1 iff S(i,j) >= t, t in 0..255.
BinaryMask binarize(const ByteMap& s, int t);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
};

/// precision = |M∩G| / (|M| + 1e-8); recall = |M∩G| / |G| (0 when G is empty).
PrecisionRecall precision_recall(const BinaryMask& m, const GroundTruth& g);

/// (1 + b2) p r / (b2 p + r), 0 when p = r = 0.
double f_measure(double p, double r, double beta2 = kFBeta2);

struct RocPoint {
  double tpr = 0.0;
  double fpr = 0.0;
};

/// TPR = |M∩G| / |G|, FPR = |M∩Ḡ| / |Ḡ|; an empty denominator yields 0.
RocPoint roc_point(const BinaryMask& m, const GroundTruth& g);

/// Trapezoidal area under `curve` after appending (0,0) and (1,1) and
/// sorting by FPR (ties by TPR).
double auc(std::span<const RocPoint> curve);

/// Mean |S - G| over all pixels, S normalised to [0, 1].
double mae(const SaliencyMap& s, const GroundTruth& g);
double mae(const ByteMap& s, const GroundTruth& g);

/// Per-threshold curves of a single frame.
struct FrameCurves {
  std::array<double, kThresholds> precision{};
  std::array<double, kThresholds> recall{};
  std::array<double, kThresholds> tpr{};
  std::array<double, kThresholds> fpr{};
  double mae = 0.0;
};

/// All 256 thresholds at once from foreground/background byte histograms.
FrameCurves frame_curves(const ByteMap& s, const GroundTruth& g);

struct EvalReport {
  std::array<double, kThresholds> precision{};
  std::array<double, kThresholds> recall{};
  std::array<double, kThresholds> tpr{};
  std::array<double, kThresholds> fpr{};
  std::array<double, kThresholds> f{};
  double max_f = 0.0;
  int max_f_threshold = 0;
  double avg_f = 0.0;
  double auc = 0.0;
  double mae = 0.0;
  std::size_t frames = 0;
  /// Maps that had to be resized to their ground truth's size.
  std::size_t resized = 0;
};

/// Bilinear resize of a byte map (results rounded back to bytes).
ByteMap resize_byte_map(const ByteMap& map, int height, int width);

/// Precision, recall, TPR and FPR are averaged over frames per threshold,
/// F is computed from the averaged precision and recall. maxF is the best
/// single threshold for the whole set; avgF the mean over all thresholds.
EvalReport evaluate_set(std::span<const ByteMap> maps, std::span<const GroundTruth> gts);

/// "maxF avgF AUC MAE" block, five decimals.
std::string format_summary(const EvalReport& report);

/// summary.txt, pr_curve.csv (threshold,precision,recall,F) and
/// roc_curve.csv (threshold,FPR,TPR) under `dir`.
void write_report(const std::filesystem::path& dir, const EvalReport& report);

}  // namespace nlsal
