#pragma once

#include "nodeval/geometry.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace nodeval {

/// A scalar loss together with its analytic gradient, one partial per free
/// input parameter.
struct LossValue {
  double value = 0.0;
  std::vector<double> gradient;
};

/// Bounding-box regression loss, 1 - ciou(pred, truth), with the exact
/// analytic gradient with respect to pred's (cx, cy, w, h). Zero with zero
/// gradient when pred equals truth. Throws ArgumentError when truth has a
/// non-positive side.
LossValue box_loss(const BoxCenter& pred, const BoxCenter& truth);

/// Objectness loss: mean binary cross-entropy over logits, evaluated in the
/// overflow-safe logit form. targets must be 0 or 1. The gradient is
/// (sigmoid(x_i) - y_i) / n. Throws ArgumentError on empty or mismatched
/// inputs.
LossValue objectness_loss(std::span<const double> logits, std::span<const int> targets);

using LossFn = std::function<LossValue(std::span<const double>)>;

/// Central finite differences per coordinate against loss_fn's analytic
/// gradient. Returns the max over coordinates of
/// |analytic - numeric| / max(1, |analytic|). Throws NumericError when a
/// probe produces a non-finite value and ArgumentError when epsilon <= 0 or
/// the gradient length disagrees with params.
double finite_difference_check(const LossFn& loss_fn, std::span<const double> params,
                               double epsilon);

/// Outcome of the seeded self-check behind `check-grads`.
struct GradientCheckReport {
  static constexpr double kTolerance = 1e-4;
  static constexpr double kEpsilon = 1e-6;

  int trials = 0;
  std::uint64_t seed = 0;
  double max_box_error = 0.0;
  double max_objectness_error = 0.0;

  bool passed() const {
    return max_box_error < kTolerance && max_objectness_error < kTolerance;
  }
};

/// Runs finite_difference_check on both losses over `trials` seeded random
/// instances (boxes are resampled away from the loss's non-smooth corner
/// ties). Deterministic for a fixed seed. Throws ArgumentError when
/// trials <= 0.
GradientCheckReport run_gradient_check(int trials, std::uint64_t seed);

} // namespace nodeval
