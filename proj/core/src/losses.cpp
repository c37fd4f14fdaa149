#include "nodeval/losses.hpp"

#include "nodeval/decode.hpp"
#include "nodeval/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

namespace nodeval {

namespace {

// Per-parameter partials over pred's (cx, cy, w, h).
using Grad4 = std::array<double, 4>;

Grad4 operator*(const Grad4& g, double s) {
  return {g[0] * s, g[1] * s, g[2] * s, g[3] * s};
}

Grad4 operator+(const Grad4& a, const Grad4& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]};
}

Grad4 operator-(const Grad4& a, const Grad4& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]};
}

} // namespace

LossValue box_loss(const BoxCenter& pred, const BoxCenter& truth) {
  if (!(truth.w > 0.0) || !(truth.h > 0.0)) {
    throw ArgumentError("box_loss: truth box must have positive sides");
  }
  if (pred.w < 0.0 || pred.h < 0.0) {
    throw ArgumentError("box_loss: pred box sides must be non-negative");
  }

  LossValue out;
  out.value = 1.0 - ciou(to_corner(pred, 1.0, 1.0), to_corner(truth, 1.0, 1.0));

  // The loss sits at its minimum for identical boxes; report the zero
  // subgradient there (one-sided IoU derivatives disagree at the kink).
  if (pred == truth) {
    out.gradient = {0.0, 0.0, 0.0, 0.0};
    return out;
  }

  // Corner values and their partials over (cx, cy, w, h).
  const double pl = pred.cx - pred.w / 2.0;
  const double pr = pred.cx + pred.w / 2.0;
  const double pt = pred.cy - pred.h / 2.0;
  const double pb = pred.cy + pred.h / 2.0;
  const double tl = truth.cx - truth.w / 2.0;
  const double tr = truth.cx + truth.w / 2.0;
  const double tt = truth.cy - truth.h / 2.0;
  const double tb = truth.cy + truth.h / 2.0;
  const Grad4 d_pl{1.0, 0.0, -0.5, 0.0};
  const Grad4 d_pr{1.0, 0.0, 0.5, 0.0};
  const Grad4 d_pt{0.0, 1.0, 0.0, -0.5};
  const Grad4 d_pb{0.0, 1.0, 0.0, 0.5};

  // IoU = I/U with I from corner min/max terms, U = areas - I.
  const double iw = std::min(pr, tr) - std::max(pl, tl);
  const double ih = std::min(pb, tb) - std::max(pt, tt);
  const bool overlapping = iw > 0.0 && ih > 0.0;
  const double inter = overlapping ? iw * ih : 0.0;
  const double pred_area = (pr - pl) * (pb - pt);
  const double truth_area = (tr - tl) * (tb - tt);
  const double uni = pred_area + truth_area - inter;
  const double overlap = inter / uni;

  Grad4 d_inter{0.0, 0.0, 0.0, 0.0};
  if (overlapping) {
    const Grad4 d_iw = (pr <= tr ? d_pr : Grad4{}) - (pl >= tl ? d_pl : Grad4{});
    const Grad4 d_ih = (pb <= tb ? d_pb : Grad4{}) - (pt >= tt ? d_pt : Grad4{});
    d_inter = d_iw * ih + d_ih * iw;
  }
  const Grad4 d_pred_area = d_pr * (pb - pt) - d_pl * (pb - pt) +
                            d_pb * (pr - pl) - d_pt * (pr - pl);
  const Grad4 d_uni = d_pred_area - d_inter;
  const Grad4 d_overlap = (d_inter * uni - d_uni * inter) * (1.0 / (uni * uni));

  // Center-distance penalty dist2/diag2.
  const double pcx = (pl + pr) / 2.0;
  const double pcy = (pt + pb) / 2.0;
  const double tcx = (tl + tr) / 2.0;
  const double tcy = (tt + tb) / 2.0;
  const double dist2 = (pcx - tcx) * (pcx - tcx) + (pcy - tcy) * (pcy - tcy);
  const Grad4 d_dist2{2.0 * (pcx - tcx), 2.0 * (pcy - tcy), 0.0, 0.0};

  const double enc_w = std::max(pr, tr) - std::min(pl, tl);
  const double enc_h = std::max(pb, tb) - std::min(pt, tt);
  const double diag2 = enc_w * enc_w + enc_h * enc_h;
  const Grad4 d_enc_w = (pr >= tr ? d_pr : Grad4{}) - (pl <= tl ? d_pl : Grad4{});
  const Grad4 d_enc_h = (pb >= tb ? d_pb : Grad4{}) - (pt <= tt ? d_pt : Grad4{});
  const Grad4 d_diag2 = d_enc_w * (2.0 * enc_w) + d_enc_h * (2.0 * enc_h);
  const Grad4 d_center =
      (d_dist2 * diag2 - d_diag2 * dist2) * (1.0 / (diag2 * diag2));

  // Aspect penalty v^2 / (1 - IoU + v), differentiated exactly (including
  // the denominator's dependence on IoU and v).
  constexpr double kFourOverPiSq = 4.0 / (M_PI * M_PI);
  const double pw = pr - pl;
  const double ph = pb - pt;
  const double angle_gap = std::atan2(tr - tl, tb - tt) - std::atan2(pw, ph);
  const double v = kFourOverPiSq * angle_gap * angle_gap;
  const double sides2 = pw * pw + ph * ph;
  Grad4 d_v{0.0, 0.0, 0.0, 0.0};
  if (sides2 > 0.0) {
    const double scale = 2.0 * kFourOverPiSq * angle_gap / sides2;
    d_v[2] = -scale * ph;
    d_v[3] = scale * pw;
  }
  const double denom = 1.0 - overlap + v;
  Grad4 d_aspect{0.0, 0.0, 0.0, 0.0};
  if (denom > 0.0) {
    d_aspect = (d_v * (2.0 * v * denom) - (d_v - d_overlap) * (v * v)) *
               (1.0 / (denom * denom));
  }

  // loss = 1 - (IoU - center - aspect)
  const Grad4 grad = d_center + d_aspect - d_overlap;
  out.gradient.assign(grad.begin(), grad.end());
  return out;
}

LossValue objectness_loss(std::span<const double> logits, std::span<const int> targets) {
  if (logits.empty()) {
    throw ArgumentError("objectness_loss: empty batch");
  }
  if (logits.size() != targets.size()) {
    throw ArgumentError("objectness_loss: logits/targets length mismatch");
  }

  const double n = static_cast<double>(logits.size());
  LossValue out;
  out.gradient.resize(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const int y = targets[i];
    if (y != 0 && y != 1) {
      throw ArgumentError("objectness_loss: targets must be 0 or 1");
    }
    const double x = logits[i];
    // -[y ln s(x) + (1-y) ln(1-s(x))] in the stable logit form.
    if (x >= 0.0) {
      sum += (1.0 - y) * x + std::log1p(std::exp(-x));
    } else {
      sum += -x * y + std::log1p(std::exp(x));
    }
    out.gradient[i] = (sigmoid(x) - y) / n;
  }
  out.value = sum / n;
  return out;
}

double finite_difference_check(const LossFn& loss_fn, std::span<const double> params,
                               double epsilon) {
  if (!(epsilon > 0.0)) {
    throw ArgumentError("finite_difference_check: epsilon must be positive");
  }

  const LossValue at_params = loss_fn(params);
  if (at_params.gradient.size() != params.size()) {
    throw ArgumentError("finite_difference_check: gradient length mismatch");
  }

  std::vector<double> probe(params.begin(), params.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    probe[i] = params[i] + epsilon;
    const double up = loss_fn(probe).value;
    probe[i] = params[i] - epsilon;
    const double down = loss_fn(probe).value;
    probe[i] = params[i];
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericError("finite_difference_check: non-finite loss at probe point");
    }
    const double numeric = (up - down) / (2.0 * epsilon);
    const double analytic = at_params.gradient[i];
    const double rel = std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic));
    worst = std::max(worst, rel);
  }
  return worst;
}

namespace {

// Engine output mapped to [0,1) by hand so streams do not depend on the
// standard library's distribution implementations.
double uniform_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

BoxCenter sample_box(std::mt19937_64& rng) {
  BoxCenter b;
  b.cx = 0.2 + 0.6 * uniform_unit(rng);
  b.cy = 0.2 + 0.6 * uniform_unit(rng);
  b.w = 0.1 + 0.5 * uniform_unit(rng);
  b.h = 0.1 + 0.5 * uniform_unit(rng);
  return b;
}

// The IoU surface has kinks where pred and truth corners tie or the boxes
// barely touch; keep probes a safe margin away from them.
bool smooth_pair(const BoxCenter& p, const BoxCenter& t) {
  constexpr double kMargin = 1e-3;
  const double pl = p.cx - p.w / 2.0, pr = p.cx + p.w / 2.0;
  const double pt = p.cy - p.h / 2.0, pb = p.cy + p.h / 2.0;
  const double tl = t.cx - t.w / 2.0, tr = t.cx + t.w / 2.0;
  const double tt = t.cy - t.h / 2.0, tb = t.cy + t.h / 2.0;
  const double iw = std::min(pr, tr) - std::max(pl, tl);
  const double ih = std::min(pb, tb) - std::max(pt, tt);
  for (const double gap : {pl - tl, pr - tr, pt - tt, pb - tb, iw, ih}) {
    if (std::abs(gap) < kMargin) {
      return false;
    }
  }
  return true;
}

} // namespace

GradientCheckReport run_gradient_check(int trials, std::uint64_t seed) {
  if (trials <= 0) {
    throw ArgumentError("run_gradient_check: trials must be positive");
  }

  GradientCheckReport report;
  report.trials = trials;
  report.seed = seed;

  std::mt19937_64 rng(seed);
  constexpr int kBatch = 16;

  for (int trial = 0; trial < trials; ++trial) {
    BoxCenter pred = sample_box(rng);
    BoxCenter truth = sample_box(rng);
    while (!smooth_pair(pred, truth)) {
      pred = sample_box(rng);
      truth = sample_box(rng);
    }
    const std::array<double, 4> box_params{pred.cx, pred.cy, pred.w, pred.h};
    const auto box_fn = [&truth](std::span<const double> p) {
      return box_loss(BoxCenter{p[0], p[1], p[2], p[3]}, truth);
    };
    report.max_box_error = std::max(
        report.max_box_error,
        finite_difference_check(box_fn, box_params, GradientCheckReport::kEpsilon));

    std::array<double, kBatch> logits;
    std::array<int, kBatch> targets;
    for (int i = 0; i < kBatch; ++i) {
      logits[i] = -4.0 + 8.0 * uniform_unit(rng);
      targets[i] = uniform_unit(rng) < 0.5 ? 0 : 1;
    }
    const auto obj_fn = [&targets](std::span<const double> p) {
      return objectness_loss(p, targets);
    };
    report.max_objectness_error = std::max(
        report.max_objectness_error,
        finite_difference_check(obj_fn, logits, GradientCheckReport::kEpsilon));
  }
  return report;
}

} // namespace nodeval
