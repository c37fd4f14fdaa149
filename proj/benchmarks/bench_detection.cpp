#include <benchmark/benchmark.h>

#include "nodeval/dataio.hpp"
#include "nodeval/decode.hpp"
#include "nodeval/geometry.hpp"
#include "nodeval/metrics.hpp"

#include <random>
#include <vector>

using namespace nodeval;

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

std::vector<ScoredBox> random_boxes(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<ScoredBox> boxes(n);
  for (auto& b : boxes) {
    b.category_id = 0;
    b.confidence = uniform(rng, 0.0, 1.0);
    b.box = BoxCenter{uniform(rng, 0.1, 0.9), uniform(rng, 0.1, 0.9),
                      uniform(rng, 0.05, 0.3), uniform(rng, 0.05, 0.3)};
  }
  return boxes;
}

} // namespace

static void BM_Iou(benchmark::State& state) {
  const auto boxes = random_boxes(1024, 1);
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& a = boxes[i % boxes.size()];
    const auto& b = boxes[(i + 7) % boxes.size()];
    benchmark::DoNotOptimize(iou(to_corner(a.box, 1.0, 1.0), to_corner(b.box, 1.0, 1.0)));
    ++i;
  }
}
BENCHMARK(BM_Iou);

static void BM_Ciou(benchmark::State& state) {
  const auto boxes = random_boxes(1024, 2);
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& a = boxes[i % boxes.size()];
    const auto& b = boxes[(i + 7) % boxes.size()];
    benchmark::DoNotOptimize(ciou(to_corner(a.box, 1.0, 1.0), to_corner(b.box, 1.0, 1.0)));
    ++i;
  }
}
BENCHMARK(BM_Ciou);

static void BM_Nms(benchmark::State& state) {
  const auto boxes = random_boxes(static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(nms(boxes, 0.45));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Nms)->RangeMultiplier(4)->Range(64, 4096)->Complexity();

static void BM_DecodeGrid(benchmark::State& state) {
  std::mt19937_64 rng(4);
  HeadOutput head;
  head.grid_size = static_cast<int>(state.range(0));
  head.anchors = {{0.06, 0.08}, {0.15, 0.2}, {0.35, 0.45}};
  head.num_categories = 1;
  head.raw.resize(head.slot_count() * head.values_per_slot());
  for (auto& x : head.raw) {
    x = uniform(rng, -4.0, 4.0);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(decode_grid(head, 0.25));
  }
}
BENCHMARK(BM_DecodeGrid)->Arg(13)->Arg(26)->Arg(52);

static void BM_MatchAndAp(benchmark::State& state) {
  std::mt19937_64 rng(5);
  std::vector<DetectionRecord> dets;
  std::vector<GroundTruthRecord> gts;
  const int images = static_cast<int>(state.range(0));
  for (int i = 0; i < images; ++i) {
    const std::string image = "img" + std::to_string(i);
    for (int g = 0; g < 3; ++g) {
      const BoxCenter box{uniform(rng, 0.1, 0.9), uniform(rng, 0.1, 0.9),
                          uniform(rng, 0.05, 0.3), uniform(rng, 0.05, 0.3)};
      gts.push_back({image, 0, box});
      if (g != 0) {  // leave one truth per image undetected
        dets.push_back({image, 0, uniform(rng, 0.0, 1.0),
                        BoxCenter{box.cx + uniform(rng, -0.05, 0.05), box.cy, box.w, box.h}});
      }
    }
    dets.push_back({image, 0, uniform(rng, 0.0, 1.0),
                    BoxCenter{uniform(rng, 0.1, 0.9), uniform(rng, 0.1, 0.9), 0.1, 0.1}});
  }
  for (auto _ : state) {
    const MatchOutcome outcome = match_detections(dets, gts, 0.2);
    benchmark::DoNotOptimize(average_precision(pr_curve(outcome)));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_MatchAndAp)->RangeMultiplier(4)->Range(16, 1024)->Complexity();

BENCHMARK_MAIN();
