#pragma once

namespace nodeval {

/// Axis-aligned box in corner form. Units are whatever the caller uses
/// (pixels or normalized fractions), as long as both boxes of a comparison
/// share them. Boxes are never clamped to the image; coordinates outside
/// [0, image_side] are legal geometry.
struct BoxCorner {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  bool valid() const { return x_min <= x_max && y_min <= y_max; }

  bool operator==(const BoxCorner&) const = default;
};

/// Axis-aligned box in center form, normalized to fractions of the image
/// width/height.
struct BoxCenter {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;

  bool operator==(const BoxCenter&) const = default;
};

/// Center form -> corner form. image_w/image_h must be positive; pass 1,1 to
/// stay in normalized units. No clamping is applied.
BoxCorner to_corner(const BoxCenter& b, double image_w, double image_h);

/// Corner form -> center form; exact inverse of to_corner.
BoxCenter to_center(const BoxCorner& b, double image_w, double image_h);

/// Intersection over union, in [0,1]. Returns 0 when the union is empty
/// (both boxes degenerate), so downstream matching stays total.
double iou(const BoxCorner& a, const BoxCorner& b);

/// Complete IoU: iou minus a center-distance penalty (squared distance over
/// squared enclosing-box diagonal) and an aspect-ratio consistency penalty
/// v^2 / (1 - iou + v) with v = 4/pi^2 * (atan(wt/ht) - atan(wp/hp))^2.
/// Equals iou when centers coincide and aspect ratios match; identical boxes
/// (including degenerate ones) score exactly 1.
double ciou(const BoxCorner& pred, const BoxCorner& truth);

} // namespace nodeval
