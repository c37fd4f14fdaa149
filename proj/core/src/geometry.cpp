#include "nodeval/geometry.hpp"

#include "nodeval/errors.hpp"

#include <algorithm>
#include <cmath>

namespace nodeval {

BoxCorner to_corner(const BoxCenter& b, double image_w, double image_h) {
  if (image_w <= 0.0 || image_h <= 0.0) {
    throw ArgumentError("to_corner: image dimensions must be positive");
  }
  return BoxCorner{(b.cx - b.w / 2.0) * image_w, (b.cy - b.h / 2.0) * image_h,
                   (b.cx + b.w / 2.0) * image_w, (b.cy + b.h / 2.0) * image_h};
}

BoxCenter to_center(const BoxCorner& b, double image_w, double image_h) {
  if (image_w <= 0.0 || image_h <= 0.0) {
    throw ArgumentError("to_center: image dimensions must be positive");
  }
  return BoxCenter{(b.x_min + b.x_max) / 2.0 / image_w,
                   (b.y_min + b.y_max) / 2.0 / image_h,
                   (b.x_max - b.x_min) / image_w, (b.y_max - b.y_min) / image_h};
}

static double intersection_area(const BoxCorner& a, const BoxCorner& b) {
  const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  if (iw <= 0.0) {
    return 0.0;
  }
  const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (ih <= 0.0) {
    return 0.0;
  }
  return iw * ih;
}

double iou(const BoxCorner& a, const BoxCorner& b) {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) {
    return 0.0;
  }
  return inter / uni;
}

double ciou(const BoxCorner& pred, const BoxCorner& truth) {
  if (pred == truth) {
    return 1.0;
  }

  const double overlap = iou(pred, truth);

  // Squared center distance over squared enclosing-box diagonal.
  const double pcx = (pred.x_min + pred.x_max) / 2.0;
  const double pcy = (pred.y_min + pred.y_max) / 2.0;
  const double tcx = (truth.x_min + truth.x_max) / 2.0;
  const double tcy = (truth.y_min + truth.y_max) / 2.0;
  const double dist2 =
      (pcx - tcx) * (pcx - tcx) + (pcy - tcy) * (pcy - tcy);
  const double enc_w =
      std::max(pred.x_max, truth.x_max) - std::min(pred.x_min, truth.x_min);
  const double enc_h =
      std::max(pred.y_max, truth.y_max) - std::min(pred.y_min, truth.y_min);
  const double diag2 = enc_w * enc_w + enc_h * enc_h;
  const double center_penalty = diag2 > 0.0 ? dist2 / diag2 : 0.0;

  // Aspect-ratio consistency term. atan2 keeps degenerate extents defined.
  constexpr double kFourOverPiSq = 4.0 / (M_PI * M_PI);
  const double angle_gap = std::atan2(truth.width(), truth.height()) -
                           std::atan2(pred.width(), pred.height());
  const double v = kFourOverPiSq * angle_gap * angle_gap;
  const double denom = 1.0 - overlap + v;
  const double aspect_penalty = denom > 0.0 ? v * v / denom : 0.0;

  return overlap - center_penalty - aspect_penalty;
}

} // namespace nodeval
