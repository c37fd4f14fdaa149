#pragma once

#include "nodeval/metrics.hpp"

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nodeval {

/// CSV with `#` comment headers recording the IoU threshold and the AP
/// interpolation mode, then `threshold,recall,precision` rows.
std::string pr_curve_csv(const PRCurve& curve, double iou_threshold);

/// CSV with the same comment headers, then `threshold,f1` rows.
std::string f1_curve_csv(std::span<const F1Point> points, double iou_threshold);

/// Round-trip parsers for the CSVs above (gt_count is recovered from the
/// comment header).
PRCurve parse_pr_curve_csv(std::string_view text);
std::vector<F1Point> parse_f1_curve_csv(std::string_view text);

/// A named data point series on the unit square.
struct ChartSeries {
  std::vector<std::pair<double, double>> points;  // (x, y), both in [0,1]
};

/// Self-contained SVG 1.1 line chart over the unit square: axes with 0.2
/// ticks, a polyline per call, a title and axis labels. Deterministic output
/// for identical input.
std::string svg_line_chart(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const ChartSeries& series);

} // namespace nodeval
