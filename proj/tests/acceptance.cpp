// Acceptance suite. Runs every acceptance criterion at its stated tolerance
// and prints one pass/fail line per criterion. Usage:
//   asl_acceptance <path-to-asl-binary> [criterion-number]
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "asl/curve.hpp"
#include "asl/loss_spec.hpp"
#include "asl/metrics.hpp"
#include "asl/net.hpp"
#include "asl/rng.hpp"
#include "asl/search.hpp"
#include "asl/surrogate.hpp"
#include "asl/synth.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace asl;

namespace {

std::string g_asl_bin;
int g_fail_count = 0;

int jobs_from_env() {
    if (const char* env = std::getenv("ASL_JOBS")) {
        try {
            const int j = std::stoi(env);
            if (j >= 1) return j;
        } catch (...) {
        }
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 2 : static_cast<int>(hw);
}

bool close_rel(double a, double b, double tol) {
    const double denom = std::max({std::abs(a), std::abs(b), 1e-6});
    return std::abs(a - b) <= tol * denom + 1e-12;
}

const Metric kAllMetrics[] = {Metric::GAcc, Metric::MAcc,  Metric::MIoU,
                              Metric::FWIoU, Metric::BIoU, Metric::BF1};

// ---------------------------------------------------------------------------
// 1. binary consistency: surrogate at one-hot probabilities == exact metric
bool criterion_binary_consistency(std::ostream& log) {
    SplitMix64 rng(0xACC1);
    bool ok = true;
    double worst = 0.0;
    for (Metric kind : kAllMetrics) {
        const MetricId id = make_metric(kind);
        for (int pair = 0; pair < 50; ++pair) {
            const int C = 2 + static_cast<int>(rng.next_below(3));
            const int h = 4 + static_cast<int>(rng.next_below(9)); // 4..12
            const int w = 4 + static_cast<int>(rng.next_below(9));
            const LabelMask pred = testutil::random_mask(rng, h, w, C);
            const LabelMask gt = testutil::random_mask(rng, h, w, C);
            const double exact =
                eval_metric(id, std::vector<LabelMask>{pred}, std::vector<LabelMask>{gt});
            const ProbMap onehot = testutil::onehot_probs(pred);
            for (int t = 0; t < 20; ++t) {
                const CurveFamily family =
                    t % 2 == 0 ? CurveFamily::Bezier : CurveFamily::PiecewiseLinear;
                const int segments = family == CurveFamily::Bezier ? 2 : 5;
                LossSpec spec;
                spec.primary = testutil::random_metric_loss(rng, id, family, segments);
                const double relaxed = surrogate_score(spec, std::vector<ProbMap>{onehot},
                                                       std::vector<LabelMask>{gt});
                worst = std::max(worst, std::abs(relaxed - exact));
                if (std::abs(relaxed - exact) >= 1e-6) ok = false;
            }
        }
    }
    log << "worst |surrogate - exact| = " << worst;
    return ok;
}

// ---------------------------------------------------------------------------
// 2. constraints: truth table, monotonicity, operator-level monotone partials
bool criterion_constraints(std::ostream& log) {
    bool ok = true;
    double worst_tt = 0.0, worst_mono = 0.0, worst_partial = 0.0;
    for (CurveFamily family : {CurveFamily::Bezier, CurveFamily::PiecewiseLinear}) {
        const int segments = family == CurveFamily::Bezier ? 2 : 5;
        SplitMix64 rng(family == CurveFamily::Bezier ? 0xACC2 : 0xACC3);
        for (int rep = 0; rep < 1000; ++rep) {
            const GCurve c = GCurve::from_params(
                family, segments, testutil::random_curve_params(rng, family, segments));
            worst_tt = std::max({worst_tt, std::abs(c.eval(0.0)), std::abs(c.eval(1.0) - 1.0)});
            if (std::abs(c.eval(0.0)) >= 1e-12 || std::abs(c.eval(1.0) - 1.0) >= 1e-12) ok = false;
            for (int p = 0; p < 5; ++p) {
                double y1 = rng.next_double(), y2 = rng.next_double();
                if (y1 > y2) std::swap(y1, y2);
                const double d = c.eval(y1) - c.eval(y2);
                worst_mono = std::max(worst_mono, d);
                if (d > 1e-12) ok = false;
            }
        }
        // operator-level monotone partials on the 101x101 grid
        for (int rep = 0; rep < 10; ++rep) {
            const GCurve c = GCurve::from_params(
                family, segments, testutil::random_curve_params(rng, family, segments));
            for (int i = 0; i <= 100; ++i) {
                for (int j = 0; j <= 100; ++j) {
                    const OpGrad a = h_and_grad(i / 100.0, j / 100.0, c);
                    const OpGrad o = h_or_grad(i / 100.0, j / 100.0, c);
                    const double low = std::min({a.da, a.db, o.da, o.db});
                    worst_partial = std::min(worst_partial, low);
                    if (low < -1e-12) ok = false;
                }
            }
        }
    }
    log << "worst truth-table err " << worst_tt << ", worst monotonicity violation " << worst_mono
        << ", lowest partial " << worst_partial;
    return ok;
}

// ---------------------------------------------------------------------------
// 3. gradients vs central differences: logits (1e-4) and weights (1e-3)
bool criterion_gradients(std::ostream& log) {
    bool ok = true;
    SplitMix64 rng(0xACC4);
    double worst_logit = 0.0, worst_weight = 0.0;

    for (Metric kind : kAllMetrics) {
        const MetricId id = make_metric(kind);
        for (int size : {6, 8, 12}) {
            const int C = 3;
            const LabelMask gt = testutil::random_mask(rng, size, size, C);
            const LogitMap z = testutil::random_logits(rng, C, size, size);
            LossSpec spec;
            spec.primary = testutil::random_metric_loss(rng, id, CurveFamily::Bezier, 2);
            const LossGrad lg = surrogate_loss_and_grad(spec, std::vector<LogitMap>{z},
                                                        std::vector<LabelMask>{gt});
            auto loss_at = [&](const LogitMap& zz) {
                return surrogate_loss_and_grad(spec, std::vector<LogitMap>{zz},
                                               std::vector<LabelMask>{gt})
                    .loss;
            };
            const double h = 1e-5;
            for (std::size_t i = 0; i < z.v.size(); ++i) {
                LogitMap zp = z, zm = z;
                zp.v[i] += h;
                zm.v[i] -= h;
                const double fd = (loss_at(zp) - loss_at(zm)) / (2.0 * h);
                const double an = lg.dlogits[0].v[i];
                const double rel =
                    std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-6});
                worst_logit = std::max(worst_logit, rel);
                if (!close_rel(an, fd, 1e-4)) ok = false;
            }
        }

        // weights: full pipeline on a 6x6 scene
        const int C = 3;
        Scene scene;
        scene.mask = testutil::random_mask(rng, 6, 6, C);
        scene.features = testutil::random_logits(rng, C + 2, 6, 6);
        LossSpec spec;
        spec.primary = testutil::random_metric_loss(rng, id, CurveFamily::Bezier, 2);
        TinySegNet net = model_init(0xACC5, C + 2, 4, C);
        ForwardCache cache;
        const LogitMap logits = forward(net, scene.features, &cache);
        const LossGrad lg = surrogate_loss_and_grad(spec, std::vector<LogitMap>{logits},
                                                    std::vector<LabelMask>{scene.mask});
        NetGrads grads = make_grads(net);
        backward(net, scene.features, cache, lg.dlogits[0], grads);
        auto loss_with = [&]() {
            const LogitMap zz = forward(net, scene.features);
            return surrogate_loss_and_grad(spec, std::vector<LogitMap>{zz},
                                           std::vector<LabelMask>{scene.mask})
                .loss;
        };
        const double hw = 1e-4;
        auto check_block = [&](std::vector<double>& params, const std::vector<double>& analytic) {
            for (std::size_t i = 0; i < params.size(); i += 5) {
                const double keep = params[i];
                params[i] = keep + hw;
                const double lp = loss_with();
                params[i] = keep - hw;
                const double lm = loss_with();
                params[i] = keep;
                const double fd = (lp - lm) / (2.0 * hw);
                const double rel =
                    std::abs(analytic[i] - fd) /
                    std::max({std::abs(analytic[i]), std::abs(fd), 1e-6});
                worst_weight = std::max(worst_weight, rel);
                if (!close_rel(analytic[i], fd, 1e-3)) ok = false;
            }
        };
        check_block(net.w1, grads.w1);
        check_block(net.b1, grads.b1);
        check_block(net.w2, grads.w2);
        check_block(net.b2, grads.b2);
    }
    log << "worst logit rel err " << worst_logit << ", worst weight rel err " << worst_weight;
    return ok;
}

// ---------------------------------------------------------------------------
// 4. exact metric vs the naive per-pixel oracle, 200 instances at 1e-12
bool criterion_oracle(std::ostream& log) {
    SplitMix64 rng(0xACC6);
    bool ok = true;
    double worst = 0.0;
    for (int rep = 0; rep < 200; ++rep) {
        const int C = 2 + static_cast<int>(rng.next_below(3));
        const int images = 1 + static_cast<int>(rng.next_below(3));
        std::vector<LabelMask> preds, gts;
        for (int n = 0; n < images; ++n) {
            preds.push_back(testutil::random_mask(rng, 6, 6, C));
            gts.push_back(testutil::random_mask(rng, 6, 6, C));
        }
        for (Metric kind : kAllMetrics) {
            const MetricId id = make_metric(kind);
            const double got = eval_metric(id, preds, gts);
            const double want = oracle::eval(id, preds, gts);
            worst = std::max(worst, std::abs(got - want));
            if (std::abs(got - want) >= 1e-12) ok = false;
        }
    }
    log << "worst |eval - oracle| = " << worst;
    return ok;
}

// ---------------------------------------------------------------------------
// 5. identity-curve training is bitwise identical to the arithmetic extension
bool criterion_identity_reduction(std::ostream& log) {
    SceneParams params;
    params.size_px = 8;
    params.num_classes = 3;
    params.imbalance = 0.3;
    const DatasetSplit data = gen_dataset(0xACC7, 16, params);

    const MetricId id = make_metric(Metric::MIoU);
    // route 1: the search path, raw identity parameters through the transform
    LossSpec via_theta;
    via_theta.primary =
        metric_loss_from_theta(id, CurveFamily::Bezier, 2,
                               identity_theta(id.kind, CurveFamily::Bezier, 2));
    // route 2: the hard-coded arithmetic extension (identity pass-through g)
    LossSpec naive;
    naive.primary.metric = id;
    for (OpKind kind : slot_layout(id.kind))
        naive.primary.slots.push_back({kind, GCurve::identity(CurveFamily::Bezier, 2)});

    TrainSchedule sched;
    sched.iterations = 40;
    sched.batch_size = 4;
    sched.seed = 77;
    const TinySegNet w0 = model_init(0xACC8, params.num_classes + 2, 6, params.num_classes);
    const TinySegNet a = train(w0, data.train, via_theta, sched);
    const TinySegNet b = train(w0, data.train, naive, sched);
    const bool bitwise = a.w1 == b.w1 && a.b1 == b.b1 && a.w2 == b.w2 && a.b2 == b.b2;

    // and the identity-curve surrogate equals the independently coded
    // arithmetic extension on random probabilities
    SplitMix64 rng(0xACC9);
    bool naive_match = true;
    double worst = 0.0;
    for (Metric kind : kAllMetrics) {
        const MetricId mid = make_metric(kind);
        LossSpec spec;
        spec.primary = identity_metric_loss(mid, CurveFamily::Bezier, 2);
        const LabelMask gt = testutil::random_mask(rng, 8, 8, 3);
        const ProbMap probs = testutil::random_probs(rng, 3, 8, 8);
        const double got =
            surrogate_score(spec, std::vector<ProbMap>{probs}, std::vector<LabelMask>{gt});
        const double want = oracle::naive_surrogate(mid, {probs}, {gt});
        worst = std::max(worst, std::abs(got - want));
        if (std::abs(got - want) >= 1e-12) naive_match = false;
    }
    log << (bitwise ? "checkpoints bitwise-identical" : "CHECKPOINTS DIFFER")
        << ", worst |identity - naive| = " << worst;
    return bitwise && naive_match;
}

// ---------------------------------------------------------------------------
// heavy searches shared by criteria 6 and 7
struct HeavyRuns {
    DatasetSplit data;
    std::vector<SearchResult> ppo2;   // one per master seed
    std::vector<SearchResult> random; // one per master seed
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4};
    SearchConfig base;
};

SearchConfig heavy_config(std::uint64_t master_seed) {
    SearchConfig cfg;
    cfg.metric = make_metric(Metric::MIoU);
    cfg.family = CurveFamily::Bezier;
    cfg.segments = 2;
    cfg.steps = 10;
    cfg.samples_per_step = 8;
    cfg.sigma = 0.2;
    cfg.epsilon = 0.1;
    cfg.master_seed = master_seed;
    cfg.jobs = jobs_from_env();
    cfg.net_hidden = 16;
    cfg.schedule.iterations = 120;
    cfg.schedule.batch_size = 8;
    cfg.schedule.lr_initial = 0.1;
    cfg.schedule.seed = derive_seed(master_seed, 0x54524eULL);
    return cfg;
}

const HeavyRuns& heavy_runs() {
    static HeavyRuns runs = [] {
        HeavyRuns r;
        SceneParams params;
        params.size_px = 16;
        params.num_classes = 3;
        params.imbalance = 0.1;
        r.data = gen_dataset(4242, 100, params);
        r.base = heavy_config(1);
        for (std::uint64_t seed : r.seeds) {
            const SearchConfig cfg = heavy_config(seed);
            r.ppo2.push_back(run_search(cfg, r.data));
            r.random.push_back(random_search(cfg, r.data));
        }
        return r;
    }();
    return runs;
}

// 6. searched mIoU beats the identity-curve baseline by >= 0.01 (median of 4)
bool criterion_search_improves(std::ostream& log) {
    const HeavyRuns& runs = heavy_runs();
    std::vector<double> diffs;
    for (std::size_t i = 0; i < runs.seeds.size(); ++i) {
        const SearchConfig cfg = heavy_config(runs.seeds[i]);
        const TinySegNet w0 =
            model_init(derive_seed(cfg.master_seed, 0x573030ULL),
                       runs.data.train[0].features.channels, cfg.net_hidden,
                       runs.data.train[0].mask.num_classes);

        LossSpec identity;
        identity.primary = identity_metric_loss(cfg.metric, cfg.family, cfg.segments);

        const TinySegNet searched_net =
            train(w0, runs.data.train, runs.ppo2[i].best_spec, cfg.schedule);
        const TinySegNet baseline_net = train(w0, runs.data.train, identity, cfg.schedule);
        const double searched = evaluate(searched_net, runs.data.hold_out, cfg.metric);
        const double baseline = evaluate(baseline_net, runs.data.hold_out, cfg.metric);
        diffs.push_back(searched - baseline);
        log << "seed " << runs.seeds[i] << ": searched " << searched << " vs baseline " << baseline
            << " (diff " << searched - baseline << "); ";
    }
    std::sort(diffs.begin(), diffs.end());
    const double median = 0.5 * (diffs[1] + diffs[2]);
    log << "median diff = " << median;
    return median >= 0.01;
}

// 7. PPO2 dominates random search on the final best-so-far mean score
bool criterion_ppo2_vs_random(std::ostream& log) {
    const HeavyRuns& runs = heavy_runs();
    const int T = runs.base.steps;

    auto best_so_far_means = [&](const std::vector<SearchResult>& results) {
        std::vector<double> mean_curve(T, 0.0);
        for (const SearchResult& r : results) {
            double best = 0.0;
            for (int t = 0; t < T; ++t) {
                best = std::max(best, r.history[t].mean_score);
                mean_curve[t] += best / results.size();
            }
        }
        return mean_curve;
    };
    const std::vector<double> ppo2_curve = best_so_far_means(runs.ppo2);
    const std::vector<double> random_curve = best_so_far_means(runs.random);

    fs::create_directories("acceptance_out");
    for (const auto& [name, curve] :
         {std::pair<std::string, const std::vector<double>&>{"ppo2_best_so_far.csv", ppo2_curve},
          {"random_best_so_far.csv", random_curve}}) {
        std::ofstream out(fs::path("acceptance_out") / name);
        out << "t,best_so_far_mean_score\n";
        for (int t = 0; t < T; ++t) out << (t + 1) << "," << curve[t] << "\n";
    }
    log << "final best-so-far mean: ppo2 " << ppo2_curve.back() << " vs random "
        << random_curve.back() << " (CSV in acceptance_out/)";
    return ppo2_curve.back() >= random_curve.back();
}

// ---------------------------------------------------------------------------
// 8. PPO2 unit behavior: exact no-op on equal rewards, clip hand cases
bool criterion_ppo2_unit(std::ostream& log) {
    bool ok = true;
    if (std::abs(ppo2_term(1.5, 1.0, 0.1) - 1.1) > 1e-12) ok = false;
    if (std::abs(ppo2_term(1.5, -1.0, 0.1) - (-1.5)) > 1e-12) ok = false;

    SearchConfig cfg;
    cfg.metric = make_metric(Metric::MIoU);
    SplitMix64 rng(0xACCA);
    const std::vector<double> mu = identity_theta(Metric::MIoU, CurveFamily::Bezier, 2);
    std::vector<std::vector<double>> samples;
    for (int i = 0; i < 6; ++i) samples.push_back(truncnorm_sample(mu, 0.2, rng.next()));
    const std::vector<double> adv(6, 0.0);
    const std::vector<double> out = ppo2_update(mu, samples, adv, cfg);
    if (out != mu) ok = false;

    log << "term(1.5,+1)=" << ppo2_term(1.5, 1.0, 0.1) << ", term(1.5,-1)="
        << ppo2_term(1.5, -1.0, 0.1) << ", equal-reward mu "
        << (out == mu ? "unchanged" : "CHANGED");
    return ok;
}

// ---------------------------------------------------------------------------
// 9. CLI determinism: byte-identical artifacts across reruns
bool criterion_cli_determinism(std::ostream& log) {
    const fs::path tmp = fs::temp_directory_path() / "asl_acceptance_cli";
    fs::remove_all(tmp);
    fs::create_directories(tmp);
    const std::string data = (tmp / "data").string();

    auto shell = [&](const std::string& args) {
        const std::string cmd = g_asl_bin + " " + args + " > /dev/null 2>&1";
        return std::system(cmd.c_str());
    };
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };

    if (shell("gen-data --seed 7 --count 16 --size 8 --classes 3 --out " + data) != 0) {
        log << "gen-data failed";
        return false;
    }
    const std::string flags = "search --data " + data +
                              " --metric miou --steps 2 --samples 2 --iters 6 --batch 4 --seed 9 "
                              "--jobs 2 --out ";
    if (shell(flags + (tmp / "a").string()) != 0 || shell(flags + (tmp / "b").string()) != 0) {
        log << "search failed";
        return false;
    }
    const bool loss_same = slurp(tmp / "a" / "loss.json") == slurp(tmp / "b" / "loss.json");
    const bool traj_same =
        slurp(tmp / "a" / "trajectory.jsonl") == slurp(tmp / "b" / "trajectory.jsonl");
    fs::remove_all(tmp);
    log << "loss.json " << (loss_same ? "identical" : "DIFFERS") << ", trajectory.jsonl "
        << (traj_same ? "identical" : "DIFFERS");
    return loss_same && traj_same;
}

// ---------------------------------------------------------------------------
// 10. BF1 tolerance machinery: tolerance 0 scores strictly below tolerance 2
bool criterion_bf1_tolerance(std::ostream& log) {
    SceneParams params;
    params.size_px = 16;
    params.num_classes = 3;
    params.imbalance = 0.1;
    const DatasetSplit data = gen_dataset(4242, 100, params);

    SearchConfig cfg = heavy_config(11);
    cfg.metric = make_metric(Metric::BF1); // tolerance 2 by default
    cfg.steps = 3;
    cfg.samples_per_step = 4;
    const SearchResult searched = run_search(cfg, data);

    const TinySegNet w0 =
        model_init(derive_seed(cfg.master_seed, 0x573030ULL), data.train[0].features.channels,
                   cfg.net_hidden, data.train[0].mask.num_classes);
    const TinySegNet net = train(w0, data.train, searched.best_spec, cfg.schedule);

    std::vector<LabelMask> preds, gts;
    for (const Scene& s : data.hold_out) {
        preds.push_back(argmax_mask(forward(net, s.features)));
        gts.push_back(s.mask);
    }
    const double tol0 = eval_metric(MetricId{Metric::BF1, 0}, preds, gts);
    const double tol2 = eval_metric(MetricId{Metric::BF1, 2}, preds, gts);
    log << "BF1(tol 0) = " << tol0 << " vs BF1(tol 2) = " << tol2;
    return tol0 < tol2;
}

// ---------------------------------------------------------------------------

struct Criterion {
    int id;
    const char* name;
    std::function<bool(std::ostream&)> run;
};

void run_criterion(const Criterion& c) {
    std::ostringstream log;
    bool ok = false;
    const auto start = std::chrono::steady_clock::now();
    try {
        ok = c.run(log);
    } catch (const std::exception& e) {
        log << "exception: " << e.what();
        ok = false;
    }
    const double secs =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                              start)
            .count() /
        1000.0;
    std::printf("[%s] %2d %-28s (%.1fs) %s\n", ok ? "PASS" : "FAIL", c.id, c.name, secs,
                log.str().c_str());
    std::fflush(stdout);
    if (!ok) ++g_fail_count;
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: asl_acceptance <path-to-asl-binary> [criterion]\n");
        return 64;
    }
    g_asl_bin = argv[1];
    const int only = argc >= 3 ? std::atoi(argv[2]) : 0;

    const std::vector<Criterion> criteria = {
        {1, "binary-consistency", criterion_binary_consistency},
        {2, "constraint-suite", criterion_constraints},
        {3, "gradient-suite", criterion_gradients},
        {4, "oracle-equivalence", criterion_oracle},
        {5, "identity-reduction", criterion_identity_reduction},
        {6, "search-improves", criterion_search_improves},
        {7, "ppo2-vs-random", criterion_ppo2_vs_random},
        {8, "ppo2-unit-behavior", criterion_ppo2_unit},
        {9, "cli-determinism", criterion_cli_determinism},
        {10, "bf1-tolerance-effect", criterion_bf1_tolerance},
    };
    for (const Criterion& c : criteria)
        if (only == 0 || only == c.id) run_criterion(c);

    if (g_fail_count == 0)
        std::printf("all criteria passed\n");
    else
        std::printf("%d criterion(s) failed\n", g_fail_count);
    return g_fail_count;
}
