#include "nodeval/decode.hpp"

#include "nodeval/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>

namespace nodeval {

namespace {

void require_head_shape(const HeadOutput& head) {
  if (!head.shape_ok()) {
    throw ArgumentError("head output shape is inconsistent");
  }
  for (const auto& a : head.anchors) {
    if (!(a.w > 0.0) || !(a.h > 0.0)) {
      throw ArgumentError("anchor sides must be positive");
    }
  }
}

double logit(double p) {
  return std::log(p / (1.0 - p));
}

// Logit such that a slot contributes essentially zero confidence
// (sigmoid(-40)^2 ~ 1.8e-35) or essentially one (symmetric).
constexpr double kOffLogit = -40.0;
constexpr double kOnLogit = 40.0;

} // namespace

std::vector<ScoredBox> decode_grid(const HeadOutput& head, double conf_threshold) {
  require_head_shape(head);
  if (!(conf_threshold >= 0.0) || conf_threshold > 1.0) {
    throw ArgumentError("conf_threshold must lie in [0,1]");
  }

  const int s = head.grid_size;
  const int num_anchors = static_cast<int>(head.anchors.size());
  const int k = head.num_categories;

  std::vector<ScoredBox> out;
  for (int row = 0; row < s; ++row) {
    for (int col = 0; col < s; ++col) {
      for (int a = 0; a < num_anchors; ++a) {
        const double* v = head.raw.data() + head.slot_offset(row, col, a);
        int best_cat = 0;
        for (int c = 1; c < k; ++c) {
          if (v[5 + c] > v[5 + best_cat]) {
            best_cat = c;
          }
        }
        const double confidence = sigmoid(v[4]) * sigmoid(v[5 + best_cat]);
        if (confidence < conf_threshold) {
          continue;
        }
        ScoredBox det;
        det.category_id = best_cat;
        det.confidence = confidence;
        det.box.cx = (2.0 * sigmoid(v[0]) - 0.5 + col) / s;
        det.box.cy = (2.0 * sigmoid(v[1]) - 0.5 + row) / s;
        const double sw = 2.0 * sigmoid(v[2]);
        const double sh = 2.0 * sigmoid(v[3]);
        det.box.w = head.anchors[a].w * sw * sw;
        det.box.h = head.anchors[a].h * sh * sh;
        out.push_back(det);
      }
    }
  }
  // Stable sort keeps the (row, col, anchor) emission order for equal scores.
  std::stable_sort(out.begin(), out.end(), [](const ScoredBox& a, const ScoredBox& b) {
    return a.confidence > b.confidence;
  });
  return out;
}

RawTarget encode_target(const BoxCenter& box, int cell_row, int cell_col,
                        int anchor_index, int grid_size, std::span<const Anchor> anchors) {
  if (grid_size <= 0 || cell_row < 0 || cell_row >= grid_size || cell_col < 0 ||
      cell_col >= grid_size) {
    throw ArgumentError("encode_target: cell outside the grid");
  }
  if (anchor_index < 0 || anchor_index >= static_cast<int>(anchors.size())) {
    throw ArgumentError("encode_target: anchor index out of range");
  }
  const Anchor& anchor = anchors[anchor_index];
  if (!(anchor.w > 0.0) || !(anchor.h > 0.0)) {
    throw ArgumentError("encode_target: anchor sides must be positive");
  }

  // Invert cx = (2*sigmoid(t_x) - 0.5 + col)/S; sigmoid's open range means
  // the center offset must stay strictly inside (-0.5, 1.5) cells.
  const double sx = (box.cx * grid_size - cell_col + 0.5) / 2.0;
  const double sy = (box.cy * grid_size - cell_row + 0.5) / 2.0;
  if (!(sx > 0.0 && sx < 1.0 && sy > 0.0 && sy < 1.0)) {
    throw EncodingError("box center not reachable from this cell");
  }

  // Invert w = anchor.w * (2*sigmoid(t_w))^2; the ratio must stay in (0,4).
  const double rw = box.w / anchor.w;
  const double rh = box.h / anchor.h;
  if (!(rw > 0.0 && rw < 4.0 && rh > 0.0 && rh < 4.0)) {
    throw EncodingError("box size outside the anchor's representable range");
  }

  RawTarget t;
  t.t_x = logit(sx);
  t.t_y = logit(sy);
  t.t_w = logit(std::sqrt(rw) / 2.0);
  t.t_h = logit(std::sqrt(rh) / 2.0);
  return t;
}

HeadOutput build_head_output(std::span<const ScoredBox> boxes, int grid_size,
                             std::span<const Anchor> anchors, int num_categories) {
  if (grid_size <= 0 || anchors.empty() || num_categories <= 0) {
    throw ArgumentError("build_head_output: bad head shape");
  }

  HeadOutput head;
  head.grid_size = grid_size;
  head.anchors.assign(anchors.begin(), anchors.end());
  head.num_categories = num_categories;
  head.raw.assign(head.slot_count() * head.values_per_slot(), kOffLogit);

  std::vector<bool> used(head.slot_count(), false);
  for (const auto& b : boxes) {
    if (b.category_id < 0 || b.category_id >= num_categories) {
      throw ArgumentError("build_head_output: category id out of range");
    }
    int row = static_cast<int>(b.box.cy * grid_size);
    int col = static_cast<int>(b.box.cx * grid_size);
    row = std::clamp(row, 0, grid_size - 1);
    col = std::clamp(col, 0, grid_size - 1);

    // Anchors ranked by how centered the box size sits in their (0,4)
    // ratio range; the first free representable one wins.
    std::vector<int> order(anchors.size());
    std::iota(order.begin(), order.end(), 0);
    auto fit = [&](int a) {
      const double rw = b.box.w / anchors[a].w;
      const double rh = b.box.h / anchors[a].h;
      return std::abs(std::log(rw)) + std::abs(std::log(rh));
    };
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b2) { return fit(a) < fit(b2); });

    bool placed = false;
    for (int a : order) {
      const std::size_t slot = (static_cast<std::size_t>(row) * grid_size + col) *
                                   anchors.size() +
                               a;
      if (used[slot]) {
        continue;
      }
      RawTarget t;
      try {
        t = encode_target(b.box, row, col, a, grid_size, anchors);
      } catch (const EncodingError&) {
        continue;
      }
      double* v = head.raw.data() + head.slot_offset(row, col, a);
      v[0] = t.t_x;
      v[1] = t.t_y;
      v[2] = t.t_w;
      v[3] = t.t_h;
      v[4] = kOnLogit;
      v[5 + b.category_id] = kOnLogit;
      used[slot] = true;
      placed = true;
      break;
    }
    if (!placed) {
      throw EncodingError("no free representable anchor slot for a box");
    }
  }
  return head;
}

std::vector<ScoredBox> nms(std::span<const ScoredBox> dets, double iou_threshold) {
  if (!(iou_threshold >= 0.0) || iou_threshold > 1.0) {
    throw ArgumentError("iou_threshold must lie in [0,1]");
  }

  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dets[a].confidence > dets[b].confidence;
  });

  std::vector<ScoredBox> kept;
  std::vector<bool> suppressed(dets.size(), false);
  for (std::size_t i = 0; i < order.size(); ++i) {
    const std::size_t di = order[i];
    if (suppressed[di]) {
      continue;
    }
    kept.push_back(dets[di]);
    const BoxCorner ci = to_corner(dets[di].box, 1.0, 1.0);
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      const std::size_t dj = order[j];
      if (suppressed[dj] || dets[dj].category_id != dets[di].category_id) {
        continue;
      }
      if (iou(ci, to_corner(dets[dj].box, 1.0, 1.0)) > iou_threshold) {
        suppressed[dj] = true;
      }
    }
  }
  return kept;
}

HeadOutput read_head_dump(std::istream& in, std::span<const Anchor> anchors) {
  std::string line;
  std::size_t line_no = 0;

  auto next_fields = [&](std::vector<double>& fields) -> bool {
    fields.clear();
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') {
        line.pop_back();
      }
      const char* p = line.c_str();
      char* end = nullptr;
      bool any = false;
      while (*p) {
        if (*p == ' ' || *p == '\t') {
          ++p;
          continue;
        }
        const double v = std::strtod(p, &end);
        if (end == p) {
          throw ParseError(line_no, "bad numeric field in head dump");
        }
        if (!std::isfinite(v)) {
          throw ParseError(line_no, "non-finite logit in head dump");
        }
        fields.push_back(v);
        p = end;
        any = true;
      }
      if (any) {
        return true;
      }
    }
    return false;
  };

  std::vector<double> fields;
  if (!next_fields(fields)) {
    throw ParseError(1, "missing head dump header");
  }
  if (fields.size() != 3) {
    throw ParseError(line_no, "head dump header must be `S A K`");
  }
  const auto as_positive_int = [&](double v, const char* name) {
    const int i = static_cast<int>(v);
    if (static_cast<double>(i) != v || i <= 0) {
      throw ParseError(line_no, std::string(name) + " must be a positive integer");
    }
    return i;
  };
  HeadOutput head;
  head.grid_size = as_positive_int(fields[0], "S");
  const int num_anchors = as_positive_int(fields[1], "A");
  head.num_categories = as_positive_int(fields[2], "K");
  if (num_anchors != static_cast<int>(anchors.size())) {
    throw ParseError(line_no, "header anchor count " + std::to_string(num_anchors) +
                                  " does not match configured anchors (" +
                                  std::to_string(anchors.size()) + ")");
  }
  head.anchors.assign(anchors.begin(), anchors.end());

  head.raw.reserve(head.slot_count() * head.values_per_slot());
  for (std::size_t slot = 0; slot < head.slot_count(); ++slot) {
    if (!next_fields(fields)) {
      throw ParseError(line_no, "head dump truncated: expected " +
                                    std::to_string(head.slot_count()) + " slot lines");
    }
    if (fields.size() != static_cast<std::size_t>(head.values_per_slot())) {
      throw ParseError(line_no, "slot line must hold " +
                                    std::to_string(head.values_per_slot()) + " logits, got " +
                                    std::to_string(fields.size()));
    }
    head.raw.insert(head.raw.end(), fields.begin(), fields.end());
  }
  if (next_fields(fields)) {
    throw ParseError(line_no, "trailing data after the last head dump slot");
  }
  return head;
}

void write_head_dump(std::ostream& out, const HeadOutput& head) {
  require_head_shape(head);
  out << head.grid_size << ' ' << head.anchors.size() << ' ' << head.num_categories << '\n';
  char buf[40];
  for (std::size_t slot = 0; slot < head.slot_count(); ++slot) {
    const double* v = head.raw.data() + slot * head.values_per_slot();
    for (int i = 0; i < head.values_per_slot(); ++i) {
      // %.17g keeps the decimal form bit-exact through strtod.
      std::snprintf(buf, sizeof(buf), "%.17g", v[i]);
      out << (i ? " " : "") << buf;
    }
    out << '\n';
  }
}

} // namespace nodeval
