#pragma once

#include "nodeval/geometry.hpp"

#include <cmath>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace nodeval {

/// Prior box shape, as normalized fractions of the image side. Both > 0.
struct Anchor {
  double w = 0.0;
  double h = 0.0;

  bool operator==(const Anchor&) const = default;
};

/// Raw single-scale detector head values: one (t_x, t_y, t_w, t_h, t_obj,
/// t_cat[0..K)) logit tuple per grid cell per anchor. Cells are stored
/// row-major with the anchor index fastest.
struct HeadOutput {
  int grid_size = 0;            // S
  std::vector<Anchor> anchors;  // length A
  int num_categories = 0;       // K
  std::vector<double> raw;      // S*S*A slots of 5+K values

  int values_per_slot() const { return 5 + num_categories; }
  std::size_t slot_count() const {
    return static_cast<std::size_t>(grid_size) * grid_size * anchors.size();
  }
  std::size_t slot_offset(int row, int col, int anchor_index) const {
    return ((static_cast<std::size_t>(row) * grid_size + col) * anchors.size() +
            anchor_index) *
           values_per_slot();
  }
  bool shape_ok() const {
    return grid_size > 0 && num_categories > 0 && !anchors.empty() &&
           raw.size() == slot_count() * values_per_slot();
  }
};

/// One decoded, confidence-scored box.
struct ScoredBox {
  int category_id = 0;
  double confidence = 0.0;
  BoxCenter box;

  bool operator==(const ScoredBox&) const = default;
};

/// Raw logit quadruple produced by encode_target.
struct RawTarget {
  double t_x = 0.0;
  double t_y = 0.0;
  double t_w = 0.0;
  double t_h = 0.0;
};

inline double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// Decodes every head slot into a scored box:
///   cx = (2*sigmoid(t_x) - 0.5 + col) / S      cy likewise with the row
///   w  = anchor.w * (2*sigmoid(t_w))^2         h likewise
///   confidence = sigmoid(t_obj) * max_k sigmoid(t_cat[k])
/// Boxes below conf_threshold are dropped. Output is ordered by descending
/// confidence, ties by (cell row, cell col, anchor index).
std::vector<ScoredBox> decode_grid(const HeadOutput& head, double conf_threshold);

/// Inverts the decode_grid box transform for one cell/anchor slot. The box
/// center must fall in the cell's decodable range and w/anchor.w, h/anchor.h
/// must lie in the open interval (0,4); otherwise throws EncodingError.
RawTarget encode_target(const BoxCenter& box, int cell_row, int cell_col,
                        int anchor_index, int grid_size, std::span<const Anchor> anchors);

/// Builds a full head tensor whose decode reproduces `boxes`: each box is
/// written to its containing cell with the best-fitting representable anchor
/// (t_obj and the category logit forced high), every other slot is filled
/// with strongly negative logits. Throws EncodingError when a box cannot be
/// placed on any free anchor of its cell.
HeadOutput build_head_output(std::span<const ScoredBox> boxes, int grid_size,
                             std::span<const Anchor> anchors, int num_categories);

/// Greedy non-maximum suppression: repeatedly keep the highest-confidence
/// remaining box and discard same-category boxes with iou > iou_threshold
/// against it. Ties break by input order; surviving boxes are returned in
/// descending confidence order, fields untouched.
std::vector<ScoredBox> nms(std::span<const ScoredBox> dets, double iou_threshold);

/// Head dump text format: header line `S A K`, then one line of 5+K logits
/// per slot, cells row-major with the anchor index fastest. Blank lines are
/// skipped. `anchors` supplies the anchor shapes (the dump stores only their
/// count) and must match the header's A.
HeadOutput read_head_dump(std::istream& in, std::span<const Anchor> anchors);
void write_head_dump(std::ostream& out, const HeadOutput& head);

} // namespace nodeval
