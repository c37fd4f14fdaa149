#include "nodeval/metrics.hpp"

#include "nodeval/errors.hpp"
#include "nodeval/geometry.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <string>
#include <utility>

namespace nodeval {

MatchOutcome match_detections(std::span<const DetectionRecord> dets,
                              std::span<const GroundTruthRecord> gts,
                              double iou_threshold) {
  if (!(iou_threshold >= 0.0) || iou_threshold > 1.0) {
    throw ArgumentError("iou_threshold must lie in [0,1]");
  }

  // Matching is independent per (image, category); std::map keeps group
  // iteration deterministic.
  using GroupKey = std::pair<std::string, int>;
  struct Group {
    std::vector<std::size_t> det_indices;
    std::vector<std::size_t> gt_indices;
  };
  std::map<GroupKey, Group> groups;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    groups[{dets[i].image_id, dets[i].category_id}].det_indices.push_back(i);
  }
  for (std::size_t i = 0; i < gts.size(); ++i) {
    groups[{gts[i].image_id, gts[i].category_id}].gt_indices.push_back(i);
  }

  std::vector<char> det_is_tp(dets.size(), 0);
  std::size_t matched_gt = 0;

  for (auto& [key, group] : groups) {
    std::stable_sort(group.det_indices.begin(), group.det_indices.end(),
                     [&](std::size_t a, std::size_t b) {
                       return dets[a].confidence > dets[b].confidence;
                     });
    std::vector<char> gt_taken(group.gt_indices.size(), 0);
    for (const std::size_t di : group.det_indices) {
      const BoxCorner det_box = to_corner(dets[di].box, 1.0, 1.0);
      double best_iou = iou_threshold;  // strictly-above wins
      std::size_t best_gt = group.gt_indices.size();
      for (std::size_t g = 0; g < group.gt_indices.size(); ++g) {
        if (gt_taken[g]) {
          continue;
        }
        const double overlap = iou(det_box, to_corner(gts[group.gt_indices[g]].box, 1.0, 1.0));
        if (overlap > best_iou) {
          best_iou = overlap;
          best_gt = g;
        }
      }
      if (best_gt < group.gt_indices.size()) {
        gt_taken[best_gt] = 1;
        det_is_tp[di] = 1;
        ++matched_gt;
      }
    }
  }

  // Merge all verdicts in descending confidence order, ties by input order.
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dets[a].confidence > dets[b].confidence;
  });

  MatchOutcome outcome;
  outcome.verdicts.reserve(dets.size());
  for (const std::size_t i : order) {
    outcome.verdicts.push_back({dets[i].confidence, det_is_tp[i] != 0});
  }
  outcome.gt_count = gts.size();
  outcome.fn_count = gts.size() - matched_gt;
  return outcome;
}

double precision(std::size_t tp, std::size_t fp) {
  if (tp + fp == 0) {
    throw UndefinedMetricError("precision undefined: no detections");
  }
  return static_cast<double>(tp) / static_cast<double>(tp + fp);
}

double recall(std::size_t tp, std::size_t fn) {
  if (tp + fn == 0) {
    throw UndefinedMetricError("recall undefined: no ground truth");
  }
  return static_cast<double>(tp) / static_cast<double>(tp + fn);
}

double f1(double p, double r) {
  if (p == 0.0 && r == 0.0) {
    return 0.0;
  }
  return 2.0 * p * r / (p + r);
}

namespace {

// Verdicts sorted by descending confidence; callers normally hold them that
// way already, but hand-built outcomes are re-sorted so the sweep is total.
std::vector<Verdict> sorted_verdicts(const MatchOutcome& outcome) {
  std::vector<Verdict> v(outcome.verdicts);
  std::stable_sort(v.begin(), v.end(),
                   [](const Verdict& a, const Verdict& b) { return a.confidence > b.confidence; });
  return v;
}

} // namespace

PRCurve pr_curve(const MatchOutcome& outcome) {
  if (outcome.gt_count == 0) {
    throw UndefinedMetricError("pr_curve undefined: no ground truth");
  }

  const std::vector<Verdict> verdicts = sorted_verdicts(outcome);
  PRCurve curve;
  curve.gt_count = outcome.gt_count;

  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    if (verdicts[i].is_tp) {
      ++tp;
    } else {
      ++fp;
    }
    // Emit one point per distinct confidence, after absorbing ties.
    if (i + 1 < verdicts.size() && verdicts[i + 1].confidence == verdicts[i].confidence) {
      continue;
    }
    PRPoint point;
    point.threshold = verdicts[i].confidence;
    point.recall = static_cast<double>(tp) / static_cast<double>(curve.gt_count);
    point.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    curve.points.push_back(point);
  }
  return curve;
}

double average_precision(const PRCurve& curve) {
  if (curve.points.empty()) {
    return 0.0;
  }

  // Monotone envelope: max precision at any recall >= this point's recall.
  std::vector<double> envelope(curve.points.size());
  double running = 0.0;
  for (std::size_t i = curve.points.size(); i-- > 0;) {
    running = std::max(running, curve.points[i].precision);
    envelope[i] = running;
  }

  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    ap += (curve.points[i].recall - prev_recall) * envelope[i];
    prev_recall = curve.points[i].recall;
  }
  return ap;
}

double map_score(std::span<const double> per_category_ap) {
  if (per_category_ap.empty()) {
    throw ArgumentError("map_score: empty AP list");
  }
  double sum = 0.0;
  for (const double ap : per_category_ap) {
    sum += ap;
  }
  return sum / static_cast<double>(per_category_ap.size());
}

std::vector<F1Point> f1_confidence_curve(const MatchOutcome& outcome) {
  if (outcome.gt_count == 0) {
    throw UndefinedMetricError("f1_confidence_curve undefined: no ground truth");
  }

  const std::vector<Verdict> verdicts = sorted_verdicts(outcome);
  std::vector<F1Point> points;

  // Anchor: a threshold above every confidence keeps nothing, so f1 is 0.
  if (verdicts.empty() || verdicts.front().confidence < 1.0) {
    points.push_back({1.0, 0.0});
  }

  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    if (verdicts[i].is_tp) {
      ++tp;
    } else {
      ++fp;
    }
    if (i + 1 < verdicts.size() && verdicts[i + 1].confidence == verdicts[i].confidence) {
      continue;
    }
    const double p = static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double r = static_cast<double>(tp) / static_cast<double>(outcome.gt_count);
    points.push_back({verdicts[i].confidence, f1(p, r)});
  }
  return points;
}

} // namespace nodeval
