#include "asl/metrics.hpp"

#include <cstdint>
#include <string>
#include <vector>

#include "asl/errors.hpp"
#include "asl/pooling.hpp"

namespace asl {

bool is_boundary_metric(Metric kind) { return kind == Metric::BIoU || kind == Metric::BF1; }

const char* metric_name(Metric kind) {
    switch (kind) {
        case Metric::GAcc: return "gacc";
        case Metric::MAcc: return "macc";
        case Metric::MIoU: return "miou";
        case Metric::FWIoU: return "fwiou";
        case Metric::BIoU: return "biou";
        case Metric::BF1: return "bf1";
    }
    return "?";
}

Metric metric_from_name(std::string_view name) {
    if (name == "gacc") return Metric::GAcc;
    if (name == "macc") return Metric::MAcc;
    if (name == "miou") return Metric::MIoU;
    if (name == "fwiou") return Metric::FWIoU;
    if (name == "biou") return Metric::BIoU;
    if (name == "bf1") return Metric::BF1;
    throw std::invalid_argument("unknown metric name: " + std::string(name));
}

MetricId make_metric(Metric kind) {
    MetricId m;
    m.kind = kind;
    m.boundary_tolerance_px = is_boundary_metric(kind) ? 2 : 0;
    return m;
}

void validate(const MetricId& metric) {
    require(metric.boundary_tolerance_px >= 0, "boundary tolerance must be >= 0");
    if (!is_boundary_metric(metric.kind))
        require(metric.boundary_tolerance_px == 0,
                "boundary tolerance must be 0 for non-boundary metrics");
}

Plane one_hot(const LabelMask& mask, int cls) {
    require(cls >= 0 && cls < mask.num_classes, "one_hot: class index out of range");
    Plane p = make_plane(mask.height, mask.width);
    for (std::size_t i = 0; i < mask.labels.size(); ++i)
        p.v[i] = (mask.labels[i] == cls) ? 1.0 : 0.0;
    return p;
}

namespace {

void check_aligned(std::span<const LabelMask> preds, std::span<const LabelMask> gts) {
    require(!preds.empty(), "eval_metric: empty sequence");
    require(preds.size() == gts.size(), "eval_metric: pred/gt sequence length mismatch");
    for (std::size_t n = 0; n < preds.size(); ++n) {
        require(preds[n].height == gts[n].height && preds[n].width == gts[n].width,
                "eval_metric: pred/gt shape mismatch");
        require(preds[n].num_classes == gts[n].num_classes,
                "eval_metric: pred/gt class-count mismatch");
        require(preds[n].num_classes == gts[0].num_classes,
                "eval_metric: class count varies across sequence");
    }
}

// mean over included classes; vacuously perfect when nothing is included
double class_mean(const std::vector<double>& terms, const std::vector<bool>& included) {
    double sum = 0.0;
    int k = 0;
    for (std::size_t c = 0; c < terms.size(); ++c) {
        if (!included[c]) continue;
        sum += terms[c];
        ++k;
    }
    return k == 0 ? 1.0 : sum / k;
}

double eval_confusion_based(Metric kind, std::span<const LabelMask> preds,
                            std::span<const LabelMask> gts) {
    const int C = gts[0].num_classes;
    std::vector<std::int64_t> conf(static_cast<std::size_t>(C) * C, 0); // [gt][pred]
    for (std::size_t n = 0; n < preds.size(); ++n)
        for (int i = 0; i < gts[n].pixels(); ++i)
            ++conf[static_cast<std::size_t>(gts[n].labels[i]) * C + preds[n].labels[i]];

    std::vector<double> diag(C), row(C), col(C);
    double total = 0.0;
    for (int g = 0; g < C; ++g) {
        for (int p = 0; p < C; ++p) {
            const double v = static_cast<double>(conf[static_cast<std::size_t>(g) * C + p]);
            row[g] += v;
            col[p] += v;
            total += v;
            if (g == p) diag[g] = v;
        }
    }

    std::vector<double> terms(C, 0.0);
    std::vector<bool> included(C, false);
    switch (kind) {
        case Metric::GAcc: {
            double correct = 0.0;
            for (int c = 0; c < C; ++c) correct += diag[c];
            return correct / total;
        }
        case Metric::MAcc:
            for (int c = 0; c < C; ++c) {
                if (row[c] <= 0.0) continue;
                included[c] = true;
                terms[c] = diag[c] / row[c];
            }
            return class_mean(terms, included);
        case Metric::MIoU:
            for (int c = 0; c < C; ++c) {
                const double uni = row[c] + col[c] - diag[c];
                if (uni <= 0.0) continue;
                included[c] = true;
                terms[c] = diag[c] / uni;
            }
            return class_mean(terms, included);
        case Metric::FWIoU: {
            double score = 0.0;
            for (int c = 0; c < C; ++c) {
                if (row[c] <= 0.0) continue;
                const double uni = row[c] + col[c] - diag[c];
                score += (row[c] / total) * (diag[c] / uni);
            }
            return score;
        }
        default: break;
    }
    throw std::logic_error("unreachable");
}

double eval_biou(std::span<const LabelMask> preds, std::span<const LabelMask> gts) {
    const int C = gts[0].num_classes;
    std::vector<double> inter(C, 0.0), uni(C, 0.0);
    for (std::size_t n = 0; n < preds.size(); ++n) {
        for (int c = 0; c < C; ++c) {
            const Plane region = boundary_extract(one_hot(gts[n], c), kBoundaryKernelPx);
            for (int i = 0; i < region.pixels(); ++i) {
                if (region.v[i] == 0.0) continue;
                const bool p = preds[n].labels[i] == c;
                const bool g = gts[n].labels[i] == c;
                inter[c] += (p && g) ? 1.0 : 0.0;
                uni[c] += (p || g) ? 1.0 : 0.0;
            }
        }
    }
    std::vector<double> terms(C, 0.0);
    std::vector<bool> included(C, false);
    for (int c = 0; c < C; ++c) {
        if (uni[c] <= 0.0) continue;
        included[c] = true;
        terms[c] = inter[c] / uni[c];
    }
    return class_mean(terms, included);
}

double eval_bf1(int tolerance_px, std::span<const LabelMask> preds,
                std::span<const LabelMask> gts) {
    const int C = gts[0].num_classes;
    const int tol_kernel = 2 * tolerance_px + 1;
    std::vector<double> pnum(C, 0.0), pden(C, 0.0), rnum(C, 0.0), rden(C, 0.0);
    for (std::size_t n = 0; n < preds.size(); ++n) {
        for (int c = 0; c < C; ++c) {
            const Plane bd_pred = boundary_extract(one_hot(preds[n], c), kBoundaryKernelPx);
            const Plane bd_gt = boundary_extract(one_hot(gts[n], c), kBoundaryKernelPx);
            const Plane mp_gt = max_pool(bd_gt, tol_kernel);
            const Plane mp_pred = max_pool(bd_pred, tol_kernel);
            for (int i = 0; i < bd_pred.pixels(); ++i) {
                pnum[c] += bd_pred.v[i] * mp_gt.v[i];
                pden[c] += bd_pred.v[i];
                rnum[c] += mp_pred.v[i] * bd_gt.v[i];
                rden[c] += bd_gt.v[i];
            }
        }
    }
    std::vector<double> terms(C, 0.0);
    std::vector<bool> included(C, false);
    for (int c = 0; c < C; ++c) {
        if (pden[c] <= 0.0 && rden[c] <= 0.0) continue; // no boundary anywhere: skip class
        included[c] = true;
        const double prec = pden[c] > 0.0 ? pnum[c] / pden[c] : 0.0;
        const double rec = rden[c] > 0.0 ? rnum[c] / rden[c] : 0.0;
        terms[c] = (prec + rec) > 0.0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
    }
    return class_mean(terms, included);
}

} // namespace

double eval_metric(const MetricId& metric, std::span<const LabelMask> preds,
                   std::span<const LabelMask> gts) {
    validate(metric);
    check_aligned(preds, gts);
    switch (metric.kind) {
        case Metric::GAcc:
        case Metric::MAcc:
        case Metric::MIoU:
        case Metric::FWIoU: return eval_confusion_based(metric.kind, preds, gts);
        case Metric::BIoU: return eval_biou(preds, gts);
        case Metric::BF1: return eval_bf1(metric.boundary_tolerance_px, preds, gts);
    }
    throw std::logic_error("unreachable");
}

} // namespace asl
