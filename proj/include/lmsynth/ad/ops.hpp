#pragma once

#include <span>
#include <vector>

#include "lmsynth/ad/tape.hpp"

namespace lmsynth::ad {

// Elementwise. add and mul also broadcast a single row b ([n] or [1,n]) over the rows of a.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);

Var matmul(Var a, Var b);
/// x W + b with b broadcast over rows.
Var linear(Var x, Var W, Var b);

/// Joins 2-D tensors along axis 0 (rows) or 1 (columns).
Var concat(const std::vector<Var>& parts, int axis);
/// Half-open range [begin, end) along axis 0 or 1 of a 2-D tensor.
Var slice(Var a, int axis, int begin, int end);

Var tanh(Var a);
Var sigmoid(Var a);
Var relu(Var a);
Var leaky_relu(Var a, double slope = 0.2);

Var sum(Var a);
Var mean(Var a);

/// Scalar losses, each a mean over elements (or over rows for the row-wise ones).
Var l1_mean(Var a, Var b);
Var mse(Var a, Var b);
/// 0.5 d^2 for |d| < 1, |d| - 0.5 otherwise, with d = a - b.
Var smooth_l1(Var a, Var b);
/// Mean over rows of 1 - cos(a_r, b_r).
Var cosine_distance(Var a, Var b);
/// Mean over rows of -log softmax(logits)_label.
Var softmax_cross_entropy(Var logits, std::span<const int> labels);
/// Mean binary cross-entropy of sigmoid(logits) against targets in [0, 1].
Var bce_with_logits(Var logits, std::span<const double> targets);

double smooth_l1_value(double d);

}  // namespace lmsynth::ad
