#pragma once

#include "nodeval/dataio.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace nodeval {

/// One detection's verdict after matching.
struct Verdict {
  double confidence = 0.0;
  bool is_tp = false;

  bool operator==(const Verdict&) const = default;
};

/// Matching result for one image set at a fixed IoU threshold. verdicts are
/// in descending-confidence order; #TP + fn_count == gt_count.
struct MatchOutcome {
  std::vector<Verdict> verdicts;
  std::size_t fn_count = 0;
  std::size_t gt_count = 0;
};

/// Greedy confidence-priority matching. Detections are scanned in descending
/// confidence order (ties by input order); each becomes TP iff some unmatched
/// ground truth of the same image and category has iou strictly above
/// iou_threshold, consuming the highest-IoU such ground truth (ties by
/// ground-truth input order). Everything else, including redundant detections
/// of an already-matched ground truth, is FP. Matching never crosses images
/// or categories.
MatchOutcome match_detections(std::span<const DetectionRecord> dets,
                              std::span<const GroundTruthRecord> gts,
                              double iou_threshold);

/// tp / (tp + fp). Throws UndefinedMetricError when tp + fp == 0.
double precision(std::size_t tp, std::size_t fp);

/// tp / (tp + fn). Throws UndefinedMetricError when tp + fn == 0.
double recall(std::size_t tp, std::size_t fn);

/// Harmonic mean 2pr/(p+r); 0 when p == r == 0.
double f1(double p, double r);

struct PRPoint {
  double threshold = 0.0;
  double recall = 0.0;
  double precision = 0.0;

  bool operator==(const PRPoint&) const = default;
};

/// Ordered (threshold, recall, precision) points; recall is non-decreasing
/// as the threshold drops.
struct PRCurve {
  std::vector<PRPoint> points;
  std::size_t gt_count = 0;
};

/// Sweeps the distinct detection confidences in descending order; each
/// threshold keeps the verdicts with confidence >= threshold and yields one
/// point from the cumulative TP/FP counts. Throws UndefinedMetricError when
/// gt_count == 0.
PRCurve pr_curve(const MatchOutcome& outcome);

/// All-points interpolated area under the PR curve: precision is replaced by
/// its monotone envelope (max precision at any recall >= r), then integrated
/// over recall from 0 to the maximum recall reached. Depends only on the
/// verdict ordering, never on the raw confidence values.
double average_precision(const PRCurve& curve);

/// Arithmetic mean of per-category AP values. Throws ArgumentError on an
/// empty list. With a single category, mAP == AP.
double map_score(std::span<const double> per_category_ap);

struct F1Point {
  double threshold = 0.0;
  double f1 = 0.0;

  bool operator==(const F1Point&) const = default;
};

/// F1 at each distinct confidence threshold (descending). When a threshold
/// keeps no detections (it exceeds every confidence), f1 is anchored to 0;
/// a leading anchor point at threshold 1 is emitted when no detection
/// reaches confidence 1. Throws UndefinedMetricError when gt_count == 0.
std::vector<F1Point> f1_confidence_curve(const MatchOutcome& outcome);

} // namespace nodeval
