#include "nodeval/decode.hpp"

#include "nodeval/errors.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

using namespace nodeval;

namespace {

HeadOutput zero_head(int s, std::vector<Anchor> anchors, int k) {
  HeadOutput head;
  head.grid_size = s;
  head.anchors = std::move(anchors);
  head.num_categories = k;
  head.raw.assign(head.slot_count() * head.values_per_slot(), 0.0);
  return head;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

} // namespace

TEST_CASE("decode_grid with zero logits hits the sigmoid identity case") {
  const HeadOutput head = zero_head(13, {{0.1, 0.2}}, 1);
  const auto dets = decode_grid(head, 0.0);
  REQUIRE(dets.size() == 13 * 13);

  // Equal confidences keep (row, col, anchor) emission order, so the first
  // detection is cell (0,0).
  const ScoredBox& first = dets.front();
  CHECK(first.confidence == 0.25);
  CHECK(first.category_id == 0);
  CHECK(first.box.cx == doctest::Approx(0.5 / 13.0).epsilon(1e-12));
  CHECK(first.box.cy == doctest::Approx(0.5 / 13.0).epsilon(1e-12));
  CHECK(first.box.w == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(first.box.h == doctest::Approx(0.2).epsilon(1e-12));
  for (const auto& d : dets) {
    CHECK(d.confidence == 0.25);
  }
}

TEST_CASE("decode_grid drops boxes below the confidence threshold") {
  const HeadOutput head = zero_head(13, {{0.1, 0.2}}, 1);
  CHECK(decode_grid(head, 0.3).empty());
  CHECK(decode_grid(head, 0.2).size() == 13 * 13);
  CHECK(decode_grid(head, 0.25).size() == 13 * 13);  // kept at equality
}

TEST_CASE("decode_grid orders by confidence, ties by cell then anchor") {
  HeadOutput head = zero_head(2, {{0.1, 0.1}, {0.2, 0.2}}, 1);
  // Boost cell (1,0), anchor 1 above everything else.
  head.raw[head.slot_offset(1, 0, 1) + 4] = 3.0;
  const auto dets = decode_grid(head, 0.0);
  REQUIRE(dets.size() == 8);
  CHECK(dets[0].box.cy == doctest::Approx(1.5 / 2.0));
  CHECK(dets[0].box.w == doctest::Approx(0.2));
  // The remaining seven tie at 0.25 and keep scan order.
  CHECK(dets[1].box.cx == doctest::Approx(0.25));
  CHECK(dets[1].box.cy == doctest::Approx(0.25));
  CHECK(dets[1].box.w == doctest::Approx(0.1));
  CHECK(dets[2].box.w == doctest::Approx(0.2));
}

TEST_CASE("decode_grid picks the best category and multiplies its score") {
  HeadOutput head = zero_head(1, {{0.1, 0.1}}, 3);
  double* v = head.raw.data();
  v[4] = 1.0;      // objectness
  v[5 + 1] = 2.0;  // category 1 wins
  const auto dets = decode_grid(head, 0.0);
  REQUIRE(dets.size() == 1);
  CHECK(dets[0].category_id == 1);
  CHECK(dets[0].confidence == doctest::Approx(sigmoid(1.0) * sigmoid(2.0)).epsilon(1e-12));
}

TEST_CASE("raising the confidence threshold never adds detections") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    HeadOutput head = zero_head(4, {{0.1, 0.15}, {0.3, 0.3}}, 2);
    for (auto& x : head.raw) {
      x = uniform(rng, -3.0, 3.0);
    }
    const double t1 = uniform(rng, 0.0, 0.5);
    const double t2 = uniform(rng, t1, 1.0);
    const auto low = decode_grid(head, t1);
    const auto high = decode_grid(head, t2);
    for (const auto& d : high) {
      CHECK(std::find(low.begin(), low.end(), d) != low.end());
    }
    const double s = head.grid_size;
    for (const auto& d : low) {
      CHECK(d.confidence >= t1);
      // Centers stay inside the decodable half-cell overhang of the image.
      CHECK(d.box.cx > -0.5 / s);
      CHECK(d.box.cx < 1.0 + 0.5 / s);
      CHECK(d.box.cy > -0.5 / s);
      CHECK(d.box.cy < 1.0 + 0.5 / s);
      CHECK(d.box.w > 0.0);
      CHECK(d.box.h > 0.0);
    }
  }
}

TEST_CASE("encode_target identity: cell-centered box with anchor-sized sides") {
  const std::vector<Anchor> anchors{{0.1, 0.2}};
  const int s = 13;
  // Center of cell (2, 5), sides equal to the anchor.
  const BoxCenter box{(5.0 + 0.5) / s, (2.0 + 0.5) / s, 0.1, 0.2};
  const RawTarget t = encode_target(box, 2, 5, 0, s, anchors);
  CHECK(t.t_x == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(t.t_y == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(t.t_w == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(t.t_h == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("encode_target rejects the open-interval boundaries") {
  const std::vector<Anchor> anchors{{0.1, 0.1}};
  // Width exactly 4x the anchor sits on the boundary of (2*sigmoid)^2.
  CHECK_THROWS_AS(encode_target(BoxCenter{0.5, 0.5, 0.4, 0.1}, 6, 6, 0, 13, anchors),
                  EncodingError);
  // Center outside the cell's reachable range.
  CHECK_THROWS_AS(encode_target(BoxCenter{0.9, 0.5, 0.1, 0.1}, 6, 6, 0, 13, anchors),
                  EncodingError);
  // Bad cell / anchor indices are argument errors.
  CHECK_THROWS_AS(encode_target(BoxCenter{0.5, 0.5, 0.1, 0.1}, 13, 0, 0, 13, anchors),
                  ArgumentError);
  CHECK_THROWS_AS(encode_target(BoxCenter{0.5, 0.5, 0.1, 0.1}, 0, 0, 1, 13, anchors),
                  ArgumentError);
}

TEST_CASE("encode/decode round-trip recovers boxes within 1e-9") {
  const int s = 13;
  const std::vector<Anchor> anchors{{0.08, 0.1}, {0.2, 0.25}};
  std::mt19937_64 rng(32);

  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int row = static_cast<int>(rng() % s);
    const int col = static_cast<int>(rng() % s);
    const int anchor_index = static_cast<int>(rng() % anchors.size());

    BoxCenter box;
    box.cx = (col + uniform(rng, 0.02, 0.98)) / s;
    box.cy = (row + uniform(rng, 0.02, 0.98)) / s;
    box.w = anchors[anchor_index].w * uniform(rng, 0.05, 3.95);
    box.h = anchors[anchor_index].h * uniform(rng, 0.05, 3.95);

    const RawTarget t = encode_target(box, row, col, anchor_index, s, anchors);

    HeadOutput head;
    head.grid_size = s;
    head.anchors = anchors;
    head.num_categories = 1;
    head.raw.assign(head.slot_count() * head.values_per_slot(), -40.0);
    double* v = head.raw.data() + head.slot_offset(row, col, anchor_index);
    v[0] = t.t_x;
    v[1] = t.t_y;
    v[2] = t.t_w;
    v[3] = t.t_h;
    v[4] = 40.0;
    v[5] = 40.0;

    const auto dets = decode_grid(head, 0.5);
    REQUIRE(dets.size() == 1);
    worst = std::max({worst, std::abs(dets[0].box.cx - box.cx),
                      std::abs(dets[0].box.cy - box.cy), std::abs(dets[0].box.w - box.w),
                      std::abs(dets[0].box.h - box.h)});
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("build_head_output round-trips a set of boxes through decode_grid") {
  const std::vector<Anchor> anchors{{0.06, 0.08}, {0.15, 0.2}, {0.35, 0.45}};
  std::vector<ScoredBox> boxes;
  boxes.push_back({0, 1.0, BoxCenter{0.25, 0.25, 0.125, 0.15625}});
  boxes.push_back({0, 1.0, BoxCenter{0.71875, 0.5, 0.25, 0.1875}});
  boxes.push_back({0, 1.0, BoxCenter{0.25, 0.75, 0.3125, 0.28125}});

  const HeadOutput head = build_head_output(boxes, 13, anchors, 1);
  const auto dets = decode_grid(head, 0.5);
  REQUIRE(dets.size() == boxes.size());
  for (const auto& b : boxes) {
    bool found = false;
    for (const auto& d : dets) {
      if (std::abs(d.box.cx - b.box.cx) < 1e-9 && std::abs(d.box.cy - b.box.cy) < 1e-9 &&
          std::abs(d.box.w - b.box.w) < 1e-9 && std::abs(d.box.h - b.box.h) < 1e-9) {
        found = true;
      }
    }
    CHECK(found);
  }
}

TEST_CASE("nms keeps a single box untouched") {
  const std::vector<ScoredBox> one{{0, 0.7, BoxCenter{0.5, 0.5, 0.2, 0.2}}};
  const auto kept = nms(one, 0.45);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0] == one[0]);
}

TEST_CASE("nms suppresses the lower-confidence duplicate") {
  const std::vector<ScoredBox> dets{{0, 0.8, BoxCenter{0.5, 0.5, 0.2, 0.2}},
                                    {0, 0.9, BoxCenter{0.5, 0.5, 0.2, 0.2}}};
  const auto kept = nms(dets, 0.45);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].confidence == 0.9);
}

TEST_CASE("nms walks a suppression chain: suppressed boxes cannot suppress") {
  // Three collinear unit boxes at offsets 0, 0.25, 0.5:
  //   iou(A,B) = iou(B,C) = 0.75/1.25 = 0.6 > 0.45, iou(A,C) = 0.5/1.5 = 1/3.
  // Greedy keeps A, drops B, then keeps C: B would have suppressed C, but a
  // suppressed box never suppresses anything.
  const auto box_at = [](double x) { return BoxCenter{x + 0.5, 0.5, 1.0, 1.0}; };
  const std::vector<ScoredBox> dets{{0, 0.9, box_at(0.0)},
                                    {0, 0.8, box_at(0.25)},
                                    {0, 0.7, box_at(0.5)}};
  const auto kept = nms(dets, 0.45);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].confidence == 0.9);
  CHECK(kept[1].confidence == 0.7);
  // Sanity: without A in the set, B does suppress C.
  const std::vector<ScoredBox> no_a{dets[1], dets[2]};
  CHECK(nms(no_a, 0.45).size() == 1);
}

TEST_CASE("nms never suppresses across categories") {
  const std::vector<ScoredBox> dets{{0, 0.9, BoxCenter{0.5, 0.5, 0.2, 0.2}},
                                    {1, 0.8, BoxCenter{0.5, 0.5, 0.2, 0.2}}};
  CHECK(nms(dets, 0.45).size() == 2);
}

TEST_CASE("nms is idempotent and never invents or edits boxes") {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<ScoredBox> dets;
    const int n = 1 + static_cast<int>(rng() % 12);
    for (int i = 0; i < n; ++i) {
      ScoredBox d;
      d.category_id = static_cast<int>(rng() % 2);
      d.confidence = uniform(rng, 0.0, 1.0);
      d.box = BoxCenter{uniform(rng, 0.2, 0.8), uniform(rng, 0.2, 0.8),
                        uniform(rng, 0.05, 0.4), uniform(rng, 0.05, 0.4)};
      dets.push_back(d);
    }
    const double threshold = uniform(rng, 0.1, 0.9);
    const auto once = nms(dets, threshold);
    const auto twice = nms(once, threshold);
    CHECK(once == twice);
    CHECK(once.size() <= dets.size());
    for (const auto& k : once) {
      CHECK(std::find(dets.begin(), dets.end(), k) != dets.end());
    }
  }
}

TEST_CASE("head dump round-trips through write and read") {
  std::mt19937_64 rng(34);
  HeadOutput head = zero_head(3, {{0.1, 0.2}, {0.3, 0.4}}, 2);
  for (auto& x : head.raw) {
    x = uniform(rng, -5.0, 5.0);
  }

  std::stringstream stream;
  write_head_dump(stream, head);
  const HeadOutput back = read_head_dump(stream, head.anchors);
  CHECK(back.grid_size == head.grid_size);
  CHECK(back.num_categories == head.num_categories);
  REQUIRE(back.raw.size() == head.raw.size());
  for (std::size_t i = 0; i < head.raw.size(); ++i) {
    CHECK(back.raw[i] == head.raw[i]);  // %.17g round-trips exactly
  }
}

TEST_CASE("read_head_dump rejects malformed input") {
  const std::vector<Anchor> anchors{{0.1, 0.2}};
  const auto parse = [&](const std::string& text) {
    std::istringstream in(text);
    return read_head_dump(in, anchors);
  };
  CHECK_THROWS_AS(parse(""), ParseError);
  CHECK_THROWS_AS(parse("1 1\n0 0 0 0 0 0\n"), ParseError);           // short header
  CHECK_THROWS_AS(parse("1 2 1\n0 0 0 0 0 0\n0 0 0 0 0 0\n"), ParseError);  // anchor mismatch
  CHECK_THROWS_AS(parse("1 1 1\n0 0 0 0 0\n"), ParseError);           // short slot line
  CHECK_THROWS_AS(parse("1 1 1\n"), ParseError);                      // truncated
  CHECK_THROWS_AS(parse("1 1 1\n0 0 0 0 0 0\n1 2 3 4 5 6\n"), ParseError);  // trailing data
  CHECK_THROWS_AS(parse("1 1 1\n0 0 nan 0 0 0\n"), ParseError);       // non-finite logit
}
