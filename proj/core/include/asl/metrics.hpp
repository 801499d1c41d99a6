#pragma once

#include <span>
#include <string_view>

#include "asl/grid.hpp"

namespace asl {

enum class Metric { GAcc, MAcc, MIoU, FWIoU, BIoU, BF1 };

inline constexpr int kBoundaryKernelPx = 3; // min-pool kernel for BD extraction

bool is_boundary_metric(Metric kind);
const char* metric_name(Metric kind);
Metric metric_from_name(std::string_view name); // throws on unknown name

// Metric identity plus the pixel tolerance used by the BF1 max-pool
// (kernel = 2*tolerance + 1). Non-boundary metrics must carry tolerance 0.
struct MetricId {
    Metric kind = Metric::MIoU;
    int boundary_tolerance_px = 0;
};

MetricId make_metric(Metric kind); // default tolerance: 2 for BIoU/BF1, else 0
void validate(const MetricId& metric);

// Indicator plane of class `cls` in `mask`.
Plane one_hot(const LabelMask& mask, int cls);

// Dataset-level metric score in [0, 1]; sums run over the whole sequence.
// Degenerate denominators: classes with an empty denominator are excluded
// from class means; if every class is excluded the score is 1.0.
double eval_metric(const MetricId& metric, std::span<const LabelMask> preds,
                   std::span<const LabelMask> gts);

} // namespace asl
