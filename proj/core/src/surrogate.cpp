#include "asl/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "asl/errors.hpp"
#include "asl/pooling.hpp"

namespace asl {

ProbMap softmax_relax(const LogitMap& logits) {
    for (double z : logits.v)
        require(std::isfinite(z), "softmax_relax: non-finite logit");
    ProbMap out = make_tensor(logits.channels, logits.height, logits.width);
    for (int y = 0; y < logits.height; ++y) {
        for (int x = 0; x < logits.width; ++x) {
            double m = logits.at(0, y, x);
            for (int c = 1; c < logits.channels; ++c) m = std::max(m, logits.at(c, y, x));
            double sum = 0.0;
            for (int c = 0; c < logits.channels; ++c) {
                const double e = std::exp(logits.at(c, y, x) - m);
                out.at(c, y, x) = e;
                sum += e;
            }
            for (int c = 0; c < logits.channels; ++c) out.at(c, y, x) /= sum;
        }
    }
    return out;
}

Plane soft_boundary(const Plane& plane, const GCurve& or_curve, const GCurve& and_curve) {
    bool binary = true;
    for (double v : plane.v) {
        require(v >= 0.0 && v <= 1.0, "soft_boundary: values outside [0, 1]");
        if (v != 0.0 && v != 1.0) binary = false;
    }
    if (binary) return boundary_extract(plane, kBoundaryKernelPx);

    const Plane eroded = min_pool(plane, kBoundaryKernelPx);
    Plane out = make_plane(plane.height, plane.width);
    for (std::size_t i = 0; i < out.v.size(); ++i)
        out.v[i] = std::max(0.0, h_xor(plane.v[i], eroded.v[i], or_curve, and_curve));
    return out;
}

namespace {

// curve handles for the metric's slot roles (see slot_layout)
struct Roles {
    const GCurve* main_and = nullptr;
    const GCurve* main_or = nullptr;
    const GCurve* prec_and = nullptr;
    const GCurve* rec_and = nullptr;
    const GCurve* bd_or = nullptr;
    const GCurve* bd_and = nullptr;
};

Roles bind_roles(const MetricLoss& loss) {
    validate(loss);
    Roles r;
    switch (loss.metric.kind) {
        case Metric::GAcc:
        case Metric::MAcc:
            r.main_and = &loss.slots[0].curve;
            break;
        case Metric::MIoU:
        case Metric::FWIoU:
            r.main_and = &loss.slots[0].curve;
            r.main_or = &loss.slots[1].curve;
            break;
        case Metric::BIoU:
            r.main_and = &loss.slots[0].curve;
            r.main_or = &loss.slots[1].curve;
            r.bd_or = &loss.slots[2].curve;
            r.bd_and = &loss.slots[3].curve;
            break;
        case Metric::BF1:
            r.prec_and = &loss.slots[0].curve;
            r.rec_and = &loss.slots[1].curve;
            r.bd_or = &loss.slots[2].curve;
            r.bd_and = &loss.slots[3].curve;
            break;
    }
    return r;
}

struct Sums {
    std::vector<double> num, den;                  // acc / IoU ratios
    std::vector<double> pnum, pden, rnum, rden;    // BF1 precision / recall
    std::vector<double> gt_count;
    double total_px = 0.0;
};

// d score / d sum, per class
struct Coefs {
    std::vector<double> dnum, dden;
    std::vector<double> dpnum, dpden, drnum;
};

void check_shapes(int channels0, std::size_t count, std::span<const LabelMask> gts) {
    require(count > 0, "surrogate: empty batch");
    require(count == gts.size(), "surrogate: batch length mismatch");
    require(channels0 == gts[0].num_classes, "surrogate: class count mismatch");
}

Plane class_plane(const Tensor3& t, int c) {
    Plane p = make_plane(t.height, t.width);
    const double* src = t.channel(c);
    std::copy(src, src + p.v.size(), p.v.begin());
    return p;
}

// per-(image, class) relaxed boundary pipeline for BF1
struct BoundaryPipeline {
    Plane p;              // class probability plane
    Plane mp_in;          // min-pooled plane
    std::vector<int> min_src;
    std::vector<double> xor_raw;
    Plane sbd;            // clamped soft boundary
    Plane mp_sbd;         // max-pooled soft boundary
    std::vector<int> max_src;
    Plane bd_gt;          // discrete gt boundary
    Plane mp_gt;          // tolerance-dilated gt boundary
};

BoundaryPipeline run_boundary_pipeline(const ProbMap& probs, const LabelMask& gt, int c,
                                       int tol_kernel, const Roles& roles) {
    BoundaryPipeline bp;
    bp.p = class_plane(probs, c);
    bp.mp_in = min_pool(bp.p, kBoundaryKernelPx, &bp.min_src);
    const int hw = bp.p.pixels();
    bp.xor_raw.resize(hw);
    bp.sbd = make_plane(bp.p.height, bp.p.width);
    for (int i = 0; i < hw; ++i) {
        bp.xor_raw[i] = h_xor(bp.p.v[i], bp.mp_in.v[i], *roles.bd_or, *roles.bd_and);
        bp.sbd.v[i] = std::max(0.0, bp.xor_raw[i]);
    }
    bp.mp_sbd = max_pool(bp.sbd, tol_kernel, &bp.max_src);
    bp.bd_gt = boundary_extract(one_hot(gt, c), kBoundaryKernelPx);
    bp.mp_gt = max_pool(bp.bd_gt, tol_kernel);
    return bp;
}

Sums forward_sums(const MetricLoss& loss, const Roles& roles, std::span<const ProbMap> probs,
                  std::span<const LabelMask> gts) {
    const int C = gts[0].num_classes;
    Sums s;
    s.num.assign(C, 0.0);
    s.den.assign(C, 0.0);
    s.pnum.assign(C, 0.0);
    s.pden.assign(C, 0.0);
    s.rnum.assign(C, 0.0);
    s.rden.assign(C, 0.0);
    s.gt_count.assign(C, 0.0);

    const Metric kind = loss.metric.kind;
    const int tol_kernel = 2 * loss.metric.boundary_tolerance_px + 1;

    for (std::size_t n = 0; n < probs.size(); ++n) {
        const ProbMap& pm = probs[n];
        const LabelMask& gt = gts[n];
        require(pm.height == gt.height && pm.width == gt.width && pm.channels == C,
                "surrogate: shape mismatch");
        const int hw = gt.pixels();
        s.total_px += hw;
        for (int i = 0; i < hw; ++i) ++s.gt_count[gt.labels[i]];

        switch (kind) {
            case Metric::GAcc:
            case Metric::MAcc:
                for (int i = 0; i < hw; ++i) {
                    const int c = gt.labels[i];
                    s.num[c] += roles.main_and->eval(pm.v[static_cast<std::size_t>(c) * hw + i]);
                }
                break;
            case Metric::MIoU:
            case Metric::FWIoU:
                for (int c = 0; c < C; ++c) {
                    const double* pc = pm.channel(c);
                    for (int i = 0; i < hw; ++i) {
                        if (gt.labels[i] == c) {
                            s.num[c] += roles.main_and->eval(pc[i]);
                            s.den[c] += 1.0;
                        } else {
                            s.den[c] += roles.main_or->eval(pc[i]);
                        }
                    }
                }
                break;
            case Metric::BIoU:
                for (int c = 0; c < C; ++c) {
                    const Plane region = boundary_extract(one_hot(gt, c), kBoundaryKernelPx);
                    const double* pc = pm.channel(c);
                    for (int i = 0; i < hw; ++i) {
                        if (region.v[i] == 0.0) continue;
                        if (gt.labels[i] == c) {
                            s.num[c] += roles.main_and->eval(pc[i]);
                            s.den[c] += 1.0;
                        } else {
                            s.den[c] += roles.main_or->eval(pc[i]);
                        }
                    }
                }
                break;
            case Metric::BF1:
                for (int c = 0; c < C; ++c) {
                    const BoundaryPipeline bp = run_boundary_pipeline(pm, gt, c, tol_kernel, roles);
                    for (int i = 0; i < hw; ++i) {
                        if (bp.mp_gt.v[i] != 0.0) s.pnum[c] += roles.prec_and->eval(bp.sbd.v[i]);
                        s.pden[c] += bp.sbd.v[i];
                        if (bp.bd_gt.v[i] != 0.0) s.rnum[c] += roles.rec_and->eval(bp.mp_sbd.v[i]);
                        s.rden[c] += bp.bd_gt.v[i];
                    }
                }
                break;
        }
    }
    return s;
}

double score_of(const MetricLoss& loss, const Sums& s, int C) {
    switch (loss.metric.kind) {
        case Metric::GAcc: {
            double num = 0.0;
            for (int c = 0; c < C; ++c) num += s.num[c];
            return num / s.total_px;
        }
        case Metric::MAcc: {
            double sum = 0.0;
            int k = 0;
            for (int c = 0; c < C; ++c) {
                if (s.gt_count[c] <= 0.0) continue;
                sum += s.num[c] / s.gt_count[c];
                ++k;
            }
            return k == 0 ? 1.0 : sum / k;
        }
        case Metric::MIoU:
        case Metric::BIoU: {
            double sum = 0.0;
            int k = 0;
            for (int c = 0; c < C; ++c) {
                if (s.den[c] <= 0.0) continue;
                sum += s.num[c] / s.den[c];
                ++k;
            }
            return k == 0 ? 1.0 : sum / k;
        }
        case Metric::FWIoU: {
            double score = 0.0;
            for (int c = 0; c < C; ++c) {
                if (s.gt_count[c] <= 0.0) continue;
                score += (s.gt_count[c] / s.total_px) * (s.num[c] / s.den[c]);
            }
            return score;
        }
        case Metric::BF1: {
            double sum = 0.0;
            int k = 0;
            for (int c = 0; c < C; ++c) {
                if (s.pden[c] <= 0.0 && s.rden[c] <= 0.0) continue;
                const double prec = s.pden[c] > 0.0 ? std::min(s.pnum[c] / s.pden[c], 1.0) : 0.0;
                const double rec = s.rden[c] > 0.0 ? std::min(s.rnum[c] / s.rden[c], 1.0) : 0.0;
                sum += (prec + rec) > 0.0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
                ++k;
            }
            return k == 0 ? 1.0 : sum / k;
        }
    }
    throw std::logic_error("unreachable");
}

Coefs backward_coefs(const MetricLoss& loss, const Sums& s, int C) {
    Coefs co;
    co.dnum.assign(C, 0.0);
    co.dden.assign(C, 0.0);
    co.dpnum.assign(C, 0.0);
    co.dpden.assign(C, 0.0);
    co.drnum.assign(C, 0.0);

    switch (loss.metric.kind) {
        case Metric::GAcc:
            for (int c = 0; c < C; ++c) co.dnum[c] = 1.0 / s.total_px;
            break;
        case Metric::MAcc: {
            int k = 0;
            for (int c = 0; c < C; ++c)
                if (s.gt_count[c] > 0.0) ++k;
            if (k == 0) break;
            for (int c = 0; c < C; ++c)
                if (s.gt_count[c] > 0.0) co.dnum[c] = 1.0 / (k * s.gt_count[c]);
            break;
        }
        case Metric::MIoU:
        case Metric::BIoU: {
            int k = 0;
            for (int c = 0; c < C; ++c)
                if (s.den[c] > 0.0) ++k;
            if (k == 0) break;
            for (int c = 0; c < C; ++c) {
                if (s.den[c] <= 0.0) continue;
                co.dnum[c] = 1.0 / (k * s.den[c]);
                co.dden[c] = -s.num[c] / (k * s.den[c] * s.den[c]);
            }
            break;
        }
        case Metric::FWIoU:
            for (int c = 0; c < C; ++c) {
                if (s.gt_count[c] <= 0.0) continue;
                const double w = s.gt_count[c] / s.total_px;
                co.dnum[c] = w / s.den[c];
                co.dden[c] = -w * s.num[c] / (s.den[c] * s.den[c]);
            }
            break;
        case Metric::BF1: {
            int k = 0;
            for (int c = 0; c < C; ++c)
                if (s.pden[c] > 0.0 || s.rden[c] > 0.0) ++k;
            if (k == 0) break;
            for (int c = 0; c < C; ++c) {
                if (s.pden[c] <= 0.0 && s.rden[c] <= 0.0) continue;
                const double praw = s.pden[c] > 0.0 ? s.pnum[c] / s.pden[c] : 0.0;
                const double rraw = s.rden[c] > 0.0 ? s.rnum[c] / s.rden[c] : 0.0;
                const double prec = std::min(praw, 1.0);
                const double rec = std::min(rraw, 1.0);
                if (prec + rec <= 0.0) continue;
                const double denom = (prec + rec) * (prec + rec);
                const double dFdp = 2.0 * rec * rec / denom;
                const double dFdr = 2.0 * prec * prec / denom;
                if (s.pden[c] > 0.0 && praw < 1.0) {
                    co.dpnum[c] = dFdp / (k * s.pden[c]);
                    co.dpden[c] = -dFdp * s.pnum[c] / (k * s.pden[c] * s.pden[c]);
                }
                if (s.rden[c] > 0.0 && rraw < 1.0) co.drnum[c] = dFdr / (k * s.rden[c]);
            }
            break;
        }
    }
    return co;
}

void scale_coefs(Coefs& co, double w) {
    for (double& v : co.dnum) v *= w;
    for (double& v : co.dden) v *= w;
    for (double& v : co.dpnum) v *= w;
    for (double& v : co.dpden) v *= w;
    for (double& v : co.drnum) v *= w;
}

// accumulates d(score)/d(prob) into dprobs
void accumulate_dprobs(const MetricLoss& loss, const Roles& roles, const Coefs& co,
                       std::span<const ProbMap> probs, std::span<const LabelMask> gts,
                       std::vector<Tensor3>& dprobs) {
    const int C = gts[0].num_classes;
    const Metric kind = loss.metric.kind;
    const int tol_kernel = 2 * loss.metric.boundary_tolerance_px + 1;
    double g, dg;

    for (std::size_t n = 0; n < probs.size(); ++n) {
        const ProbMap& pm = probs[n];
        const LabelMask& gt = gts[n];
        Tensor3& dp = dprobs[n];
        const int hw = gt.pixels();

        switch (kind) {
            case Metric::GAcc:
            case Metric::MAcc:
                for (int i = 0; i < hw; ++i) {
                    const int c = gt.labels[i];
                    if (co.dnum[c] == 0.0) continue;
                    const std::size_t j = static_cast<std::size_t>(c) * hw + i;
                    roles.main_and->eval_grad(pm.v[j], g, dg);
                    dp.v[j] += co.dnum[c] * dg;
                }
                break;
            case Metric::MIoU:
            case Metric::FWIoU:
                for (int c = 0; c < C; ++c) {
                    if (co.dnum[c] == 0.0 && co.dden[c] == 0.0) continue;
                    const double* pc = pm.channel(c);
                    double* dc = dp.channel(c);
                    for (int i = 0; i < hw; ++i) {
                        if (gt.labels[i] == c) {
                            roles.main_and->eval_grad(pc[i], g, dg);
                            dc[i] += co.dnum[c] * dg;
                        } else {
                            roles.main_or->eval_grad(pc[i], g, dg);
                            dc[i] += co.dden[c] * dg;
                        }
                    }
                }
                break;
            case Metric::BIoU:
                for (int c = 0; c < C; ++c) {
                    if (co.dnum[c] == 0.0 && co.dden[c] == 0.0) continue;
                    const Plane region = boundary_extract(one_hot(gt, c), kBoundaryKernelPx);
                    const double* pc = pm.channel(c);
                    double* dc = dp.channel(c);
                    for (int i = 0; i < hw; ++i) {
                        if (region.v[i] == 0.0) continue;
                        if (gt.labels[i] == c) {
                            roles.main_and->eval_grad(pc[i], g, dg);
                            dc[i] += co.dnum[c] * dg;
                        } else {
                            roles.main_or->eval_grad(pc[i], g, dg);
                            dc[i] += co.dden[c] * dg;
                        }
                    }
                }
                break;
            case Metric::BF1:
                for (int c = 0; c < C; ++c) {
                    if (co.dpnum[c] == 0.0 && co.dpden[c] == 0.0 && co.drnum[c] == 0.0) continue;
                    const BoundaryPipeline bp = run_boundary_pipeline(pm, gt, c, tol_kernel, roles);
                    std::vector<double> dsbd(hw, 0.0);
                    for (int i = 0; i < hw; ++i) {
                        if (bp.mp_gt.v[i] != 0.0 && co.dpnum[c] != 0.0) {
                            roles.prec_and->eval_grad(bp.sbd.v[i], g, dg);
                            dsbd[i] += co.dpnum[c] * dg;
                        }
                        dsbd[i] += co.dpden[c];
                    }
                    if (co.drnum[c] != 0.0) {
                        for (int i = 0; i < hw; ++i) {
                            if (bp.bd_gt.v[i] == 0.0) continue;
                            roles.rec_and->eval_grad(bp.mp_sbd.v[i], g, dg);
                            dsbd[bp.max_src[i]] += co.drnum[c] * dg;
                        }
                    }
                    double* dc = dp.channel(c);
                    for (int i = 0; i < hw; ++i) {
                        if (bp.xor_raw[i] <= 0.0 || dsbd[i] == 0.0) continue;
                        const OpGrad xg =
                            h_xor_grad(bp.p.v[i], bp.mp_in.v[i], *roles.bd_or, *roles.bd_and);
                        dc[i] += dsbd[i] * xg.da;
                        dc[bp.min_src[i]] += dsbd[i] * xg.db;
                    }
                }
                break;
        }
    }
}

double part_score(const MetricLoss& loss, std::span<const ProbMap> probs,
                  std::span<const LabelMask> gts) {
    const Roles roles = bind_roles(loss);
    const Sums sums = forward_sums(loss, roles, probs, gts);
    return score_of(loss, sums, gts[0].num_classes);
}

// one forward pass for the score, one backward pass for the gradients
double part_score_backward(const MetricLoss& loss, double weight, std::span<const ProbMap> probs,
                           std::span<const LabelMask> gts, std::vector<Tensor3>& dprobs) {
    const Roles roles = bind_roles(loss);
    const int C = gts[0].num_classes;
    const Sums sums = forward_sums(loss, roles, probs, gts);
    Coefs co = backward_coefs(loss, sums, C);
    scale_coefs(co, weight);
    accumulate_dprobs(loss, roles, co, probs, gts, dprobs);
    return score_of(loss, sums, C);
}

} // namespace

double surrogate_score(const LossSpec& spec, std::span<const ProbMap> probs,
                       std::span<const LabelMask> gts) {
    validate(spec);
    check_shapes(probs.empty() ? 0 : probs[0].channels, probs.size(), gts);
    for (const ProbMap& pm : probs) validate_probs(pm);

    double score = spec.weight_primary * part_score(spec.primary, probs, gts);
    if (spec.secondary) score += spec.weight_secondary * part_score(*spec.secondary, probs, gts);
    return score;
}

LossGrad surrogate_loss_and_grad(const LossSpec& spec, std::span<const LogitMap> logits,
                                 std::span<const LabelMask> gts) {
    validate(spec);
    check_shapes(logits.empty() ? 0 : logits[0].channels, logits.size(), gts);

    std::vector<ProbMap> probs;
    probs.reserve(logits.size());
    for (const LogitMap& z : logits) probs.push_back(softmax_relax(z));

    std::vector<Tensor3> dprobs;
    dprobs.reserve(probs.size());
    for (const ProbMap& pm : probs) dprobs.push_back(make_tensor(pm.channels, pm.height, pm.width));

    double score =
        spec.weight_primary * part_score_backward(spec.primary, spec.weight_primary, probs, gts, dprobs);
    if (spec.secondary)
        score += spec.weight_secondary *
                 part_score_backward(*spec.secondary, spec.weight_secondary, probs, gts, dprobs);

    LossGrad out;
    out.loss = 1.0 - score;
    if (!std::isfinite(out.loss)) throw NumericError("surrogate loss is not finite");

    // chain through the softmax Jacobian; the loss flips the sign
    out.dlogits.reserve(probs.size());
    for (std::size_t n = 0; n < probs.size(); ++n) {
        const ProbMap& pm = probs[n];
        const Tensor3& dp = dprobs[n];
        LogitMap dz = make_tensor(pm.channels, pm.height, pm.width);
        const int hw = pm.height * pm.width;
        for (int i = 0; i < hw; ++i) {
            double dot = 0.0;
            for (int c = 0; c < pm.channels; ++c) {
                const std::size_t j = static_cast<std::size_t>(c) * hw + i;
                dot += dp.v[j] * pm.v[j];
            }
            for (int c = 0; c < pm.channels; ++c) {
                const std::size_t j = static_cast<std::size_t>(c) * hw + i;
                const double g = pm.v[j] * (dp.v[j] - dot);
                if (!std::isfinite(g))
                    throw NumericError("non-finite gradient at image " + std::to_string(n) +
                                       ", class " + std::to_string(c) + ", pixel (" +
                                       std::to_string(i / pm.width) + ", " +
                                       std::to_string(i % pm.width) + ")");
                dz.v[j] = -g;
            }
        }
        out.dlogits.push_back(std::move(dz));
    }
    return out;
}

} // namespace asl
