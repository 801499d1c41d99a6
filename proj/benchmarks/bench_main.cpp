#include <benchmark/benchmark.h>

#include <vector>

#include "asl/loss_spec.hpp"
#include "asl/metrics.hpp"
#include "asl/net.hpp"
#include "asl/rng.hpp"
#include "asl/surrogate.hpp"
#include "asl/synth.hpp"

using namespace asl;

namespace {

LabelMask random_mask(SplitMix64& rng, int h, int w, int C) {
    LabelMask m = make_mask(h, w, C);
    for (auto& l : m.labels) l = static_cast<std::uint8_t>(rng.next_below(C));
    return m;
}

LogitMap random_logits(SplitMix64& rng, int C, int h, int w) {
    LogitMap z = make_tensor(C, h, w);
    for (double& v : z.v) v = rng.next_normal();
    return z;
}

void BM_EvalMetric(benchmark::State& state, Metric kind) {
    SplitMix64 rng(1);
    std::vector<LabelMask> preds, gts;
    for (int n = 0; n < 8; ++n) {
        preds.push_back(random_mask(rng, 64, 64, 4));
        gts.push_back(random_mask(rng, 64, 64, 4));
    }
    const MetricId id = make_metric(kind);
    for (auto _ : state) benchmark::DoNotOptimize(eval_metric(id, preds, gts));
}

void BM_CurveEval(benchmark::State& state) {
    SplitMix64 rng(2);
    std::vector<double> raw(GCurve::param_count(CurveFamily::Bezier, 2));
    for (double& v : raw) v = rng.next_open();
    const GCurve c = GCurve::from_params(CurveFamily::Bezier, 2, raw);
    double y = 0.0;
    for (auto _ : state) {
        y += 1e-6;
        if (y > 1.0) y = 0.0;
        benchmark::DoNotOptimize(c.eval(y));
    }
}

void BM_SurrogateLossGrad(benchmark::State& state, Metric kind) {
    SplitMix64 rng(3);
    const int C = 3;
    std::vector<LogitMap> logits;
    std::vector<LabelMask> gts;
    for (int n = 0; n < 8; ++n) {
        logits.push_back(random_logits(rng, C, 16, 16));
        gts.push_back(random_mask(rng, 16, 16, C));
    }
    LossSpec spec;
    std::vector<double> theta(param_dim(kind, CurveFamily::Bezier, 2));
    for (double& v : theta) v = rng.next_open();
    spec.primary = metric_loss_from_theta(make_metric(kind), CurveFamily::Bezier, 2, theta);
    for (auto _ : state) benchmark::DoNotOptimize(surrogate_loss_and_grad(spec, logits, gts));
}

void BM_TrainStep(benchmark::State& state) {
    SceneParams params;
    params.size_px = 16;
    params.num_classes = 3;
    params.imbalance = 0.2;
    const DatasetSplit data = gen_dataset(7, 8, params);
    LossSpec spec;
    spec.primary = identity_metric_loss(make_metric(Metric::MIoU), CurveFamily::Bezier, 2);
    TrainSchedule sched;
    sched.iterations = 1;
    sched.batch_size = 8;
    const TinySegNet w0 = model_init(9, params.num_classes + 2, 16, params.num_classes);
    for (auto _ : state) benchmark::DoNotOptimize(train(w0, data.train, spec, sched));
}

} // namespace

BENCHMARK_CAPTURE(BM_EvalMetric, miou, Metric::MIoU);
BENCHMARK_CAPTURE(BM_EvalMetric, bf1, Metric::BF1);
BENCHMARK(BM_CurveEval);
BENCHMARK_CAPTURE(BM_SurrogateLossGrad, miou, Metric::MIoU);
BENCHMARK_CAPTURE(BM_SurrogateLossGrad, bf1, Metric::BF1);
BENCHMARK(BM_TrainStep);

BENCHMARK_MAIN();
