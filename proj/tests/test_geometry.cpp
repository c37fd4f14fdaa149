#include "nodeval/geometry.hpp"

#include "nodeval/errors.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace nodeval;

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

BoxCorner random_corner_box(std::mt19937_64& rng) {
  const double x1 = uniform(rng, 0.0, 1.0);
  const double x2 = uniform(rng, 0.0, 1.0);
  const double y1 = uniform(rng, 0.0, 1.0);
  const double y2 = uniform(rng, 0.0, 1.0);
  return BoxCorner{std::min(x1, x2), std::min(y1, y2), std::max(x1, x2), std::max(y1, y2)};
}

} // namespace

TEST_CASE("to_corner maps the documented examples") {
  const BoxCorner full = to_corner(BoxCenter{0.5, 0.5, 1.0, 1.0}, 100.0, 100.0);
  CHECK(full == BoxCorner{0.0, 0.0, 100.0, 100.0});

  const BoxCorner point = to_corner(BoxCenter{0.5, 0.5, 0.0, 0.0}, 100.0, 100.0);
  CHECK(point == BoxCorner{50.0, 50.0, 50.0, 50.0});

  const BoxCorner b = to_corner(BoxCenter{0.25, 0.5, 0.1, 0.2}, 416.0, 416.0);
  CHECK(b.x_min == doctest::Approx(83.2).epsilon(1e-12));
  CHECK(b.y_min == doctest::Approx(166.4).epsilon(1e-12));
  CHECK(b.x_max == doctest::Approx(124.8).epsilon(1e-12));
  CHECK(b.y_max == doctest::Approx(249.6).epsilon(1e-12));
}

TEST_CASE("to_corner rejects non-positive image dimensions") {
  CHECK_THROWS_AS(to_corner(BoxCenter{0.5, 0.5, 0.1, 0.1}, 0.0, 100.0), ArgumentError);
  CHECK_THROWS_AS(to_center(BoxCorner{0, 0, 1, 1}, 100.0, -1.0), ArgumentError);
}

TEST_CASE("center/corner round-trip preserves fields within 1e-12") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    BoxCenter b;
    b.cx = uniform(rng, 0.0, 1.0);
    b.cy = uniform(rng, 0.0, 1.0);
    b.w = uniform(rng, 0.0, 1.0);
    b.h = uniform(rng, 0.0, 1.0);
    const BoxCenter back = to_center(to_corner(b, 416.0, 416.0), 416.0, 416.0);
    CHECK(back.cx == doctest::Approx(b.cx).epsilon(1e-12));
    CHECK(back.cy == doctest::Approx(b.cy).epsilon(1e-12));
    CHECK(back.w == doctest::Approx(b.w).epsilon(1e-12));
    CHECK(back.h == doctest::Approx(b.h).epsilon(1e-12));
  }
}

TEST_CASE("iou matches the documented examples") {
  const BoxCorner unit{0, 0, 1, 1};
  CHECK(iou(unit, unit) == 1.0);
  CHECK(iou(unit, BoxCorner{2, 2, 3, 3}) == 0.0);

  const BoxCorner a{0, 0, 2, 2};
  const BoxCorner b{1, 1, 3, 3};
  CHECK(iou(a, b) == doctest::Approx(1.0 / 7.0).epsilon(1e-12));
  CHECK(iou(a, b) == doctest::Approx(oracles::rasterized_iou(a, b)).epsilon(1e-12));
}

TEST_CASE("iou of two degenerate boxes is 0 by convention") {
  const BoxCorner p{1, 1, 1, 1};
  CHECK(iou(p, p) == 0.0);
  CHECK(iou(p, BoxCorner{2, 2, 2, 2}) == 0.0);
}

TEST_CASE("iou is symmetric and bounded") {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 2000; ++i) {
    const BoxCorner a = random_corner_box(rng);
    const BoxCorner b = random_corner_box(rng);
    const double ab = iou(a, b);
    CHECK(ab == iou(b, a));
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
  }
  const BoxCorner box{0.1, 0.2, 0.5, 0.9};
  CHECK(iou(box, box) == 1.0);
}

TEST_CASE("iou is invariant under a shared scale and shift") {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 500; ++i) {
    const BoxCorner a = random_corner_box(rng);
    const BoxCorner b = random_corner_box(rng);
    const double scale = uniform(rng, 0.5, 20.0);
    const double dx = uniform(rng, -5.0, 5.0);
    const double dy = uniform(rng, -5.0, 5.0);
    const auto transform = [&](const BoxCorner& box) {
      return BoxCorner{box.x_min * scale + dx, box.y_min * scale + dy,
                       box.x_max * scale + dx, box.y_max * scale + dy};
    };
    CHECK(iou(transform(a), transform(b)) == doctest::Approx(iou(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("iou equals rasterized cell counting on integer boxes") {
  std::mt19937_64 rng(14);
  const auto random_int_box = [&]() {
    const int x1 = static_cast<int>(rng() % 13);
    const int x2 = x1 + static_cast<int>(rng() % (13 - x1));
    const int y1 = static_cast<int>(rng() % 13);
    const int y2 = y1 + static_cast<int>(rng() % (13 - y1));
    return BoxCorner{static_cast<double>(x1), static_cast<double>(y1),
                     static_cast<double>(x2), static_cast<double>(y2)};
  };
  for (int i = 0; i < 3000; ++i) {
    const BoxCorner a = random_int_box();
    const BoxCorner b = random_int_box();
    CHECK(iou(a, b) == doctest::Approx(oracles::rasterized_iou(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("ciou matches the documented examples") {
  const BoxCorner square{0, 0, 2, 2};
  CHECK(ciou(square, square) == 1.0);

  // Far-apart boxes: the center penalty dominates and the value drops below 0.
  CHECK(ciou(BoxCorner{0, 0, 1, 1}, BoxCorner{10, 10, 11, 11}) < 0.0);

  // Shifted copy: the center-distance penalty is strictly positive.
  const BoxCorner shifted{0.5, 0, 2.5, 2};
  CHECK(ciou(square, shifted) < iou(square, shifted));
}

TEST_CASE("ciou never exceeds iou; equality needs matching centers and aspects") {
  std::mt19937_64 rng(15);
  for (int i = 0; i < 2000; ++i) {
    const BoxCorner a = random_corner_box(rng);
    const BoxCorner b = random_corner_box(rng);
    CHECK(ciou(a, b) <= iou(a, b) + 1e-15);
  }

  // Same center and aspect ratio, different size: both penalties vanish.
  const BoxCorner inner{1, 1, 3, 3};
  const BoxCorner outer{0, 0, 4, 4};
  CHECK(ciou(inner, outer) == doctest::Approx(iou(inner, outer)).epsilon(1e-12));

  // Different center: strictly below iou.
  CHECK(ciou(inner, BoxCorner{1.5, 1, 3.5, 3}) < iou(inner, BoxCorner{1.5, 1, 3.5, 3}));
  // Same center, different aspect: strictly below iou.
  const BoxCorner wide{0, 1, 4, 3};
  CHECK(ciou(wide, outer) < iou(wide, outer));
}

TEST_CASE("ciou of identical degenerate boxes is 1 by convention") {
  const BoxCorner point{3, 3, 3, 3};
  CHECK(ciou(point, point) == 1.0);
}
