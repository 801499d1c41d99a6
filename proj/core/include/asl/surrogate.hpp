#pragma once

#include <span>
#include <vector>

#include "asl/grid.hpp"
#include "asl/loss_spec.hpp"

namespace asl {

// Numerically stable per-pixel softmax over classes.
ProbMap softmax_relax(const LogitMap& logits);

// Relaxed boundary map: h_xor(p, min_pool(p, 3)) per pixel, clamped into
// [0, 1]. Exactly binary planes short-circuit to the discrete boundary,
// which the truth-table constraint makes equivalent.
Plane soft_boundary(const Plane& plane, const GCurve& or_curve, const GCurve& and_curve);

// Continuous surrogate of the spec's metric with probabilities in place of
// one-hot predictions and parameterized operators in place of logical ops.
// Shares eval_metric's degenerate-denominator rules.
double surrogate_score(const LossSpec& spec, std::span<const ProbMap> probs,
                       std::span<const LabelMask> gts);

struct LossGrad {
    double loss = 0.0;                // 1 - surrogate score over the batch
    std::vector<LogitMap> dlogits;    // same shapes as the input logits
};

// Loss and its exact gradient w.r.t. the logits, chained through the metric
// ratio structure, the operator partials, and the softmax Jacobian. The
// minibatch is treated as the dataset: sums pool over all images before any
// ratio is formed.
LossGrad surrogate_loss_and_grad(const LossSpec& spec, std::span<const LogitMap> logits,
                                 std::span<const LabelMask> gts);

} // namespace asl
