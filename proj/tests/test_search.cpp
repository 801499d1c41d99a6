#include <doctest.h>

#include <cmath>

#include "asl/rng.hpp"
#include "asl/search.hpp"
#include "test_util.hpp"

using namespace asl;

namespace {

SearchConfig tiny_config() {
    SearchConfig cfg;
    cfg.metric = make_metric(Metric::MIoU);
    cfg.steps = 2;
    cfg.samples_per_step = 3;
    cfg.schedule.iterations = 6;
    cfg.schedule.batch_size = 2;
    cfg.schedule.lr_initial = 0.1;
    cfg.net_hidden = 4;
    cfg.master_seed = 5;
    return cfg;
}

DatasetSplit tiny_data() {
    SceneParams params;
    params.size_px = 8;
    params.num_classes = 3;
    params.imbalance = 0.3;
    return gen_dataset(21, 8, params);
}

} // namespace

TEST_CASE("truncated normal samples live in the unit box") {
    const std::vector<double> mu = {0.1, 0.5, 0.9};
    SplitMix64 seeds(1);
    for (int rep = 0; rep < 2000; ++rep) {
        const std::vector<double> x = truncnorm_sample(mu, 0.2, seeds.next());
        for (double v : x) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("symmetric truncation keeps the empirical mean at mu") {
    const std::vector<double> mu = {0.5};
    double sum = 0.0;
    const int n = 100000;
    SplitMix64 seeds(7);
    for (int i = 0; i < n; ++i) sum += truncnorm_sample(mu, 0.2, seeds.next())[0];
    CHECK(std::abs(sum / n - 0.5) < 0.005);
}

TEST_CASE("vanishing sigma collapses samples onto mu") {
    const std::vector<double> mu = {0.3, 0.7};
    SplitMix64 seeds(11);
    for (int rep = 0; rep < 100; ++rep) {
        const std::vector<double> x = truncnorm_sample(mu, 1e-6, seeds.next());
        CHECK(std::abs(x[0] - 0.3) < 1e-4);
        CHECK(std::abs(x[1] - 0.7) < 1e-4);
    }
}

TEST_CASE("truncated normal density integrates to 1 on [0, 1]") {
    for (double mu : {0.2, 0.5, 0.85}) {
        const std::vector<double> muv = {mu};
        const int n = 100001;
        double integral = 0.0;
        for (int i = 0; i < n; ++i) {
            const double x = static_cast<double>(i) / (n - 1);
            const double p = std::exp(truncnorm_logpdf(std::vector<double>{x}, muv, 0.2));
            const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0; // trapezoid
            integral += w * p / (n - 1);
        }
        CHECK(std::abs(integral - 1.0) < 1e-6);
    }
}

TEST_CASE("density symmetry around mu and dominance over the parent normal") {
    const std::vector<double> mu = {0.5};
    for (double a : {0.05, 0.2, 0.4}) {
        const double lo = truncnorm_logpdf(std::vector<double>{0.5 - a}, mu, 0.2);
        const double hi = truncnorm_logpdf(std::vector<double>{0.5 + a}, mu, 0.2);
        CHECK(lo == doctest::Approx(hi).epsilon(1e-12));
    }
    for (double x : {0.1, 0.5, 0.9}) {
        const double trunc = truncnorm_logpdf(std::vector<double>{x}, mu, 0.2);
        const double parent = std::log(norm_pdf((x - 0.5) / 0.2) / 0.2);
        CHECK(trunc >= parent);
    }
    CHECK(truncnorm_logpdf(std::vector<double>{1.2}, mu, 0.2) ==
          -std::numeric_limits<double>::infinity());
}

TEST_CASE("clipped PPO2 term matches the hand-computed cases") {
    CHECK(ppo2_term(1.5, 1.0, 0.1) == doctest::Approx(1.1).epsilon(1e-12));
    CHECK(ppo2_term(1.5, -1.0, 0.1) == doctest::Approx(-1.5).epsilon(1e-12));
}

TEST_CASE("objective at mu = mu_t is the mean advantage (zero when centered)") {
    SplitMix64 rng(13);
    const std::vector<double> mu = {0.4, 0.6};
    std::vector<std::vector<double>> samples;
    std::vector<double> scores;
    for (int i = 0; i < 4; ++i) {
        samples.push_back(truncnorm_sample(mu, 0.2, rng.next()));
        scores.push_back(rng.next_double());
    }
    double mean = 0.0;
    for (double s : scores) mean += s;
    mean /= scores.size();
    std::vector<double> adv(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) adv[i] = scores[i] - mean;
    const double obj = ppo2_objective(mu, mu, samples, adv, 0.2, 0.1);
    CHECK(std::abs(obj) < 1e-12);
}

TEST_CASE("equal rewards leave mu exactly unchanged") {
    SplitMix64 rng(17);
    SearchConfig cfg = tiny_config();
    const std::vector<double> mu = {0.3, 0.5, 0.7};
    std::vector<std::vector<double>> samples;
    for (int i = 0; i < 5; ++i) samples.push_back(truncnorm_sample(mu, cfg.sigma, rng.next()));
    const std::vector<double> adv(5, 0.0); // equal rewards center to zero
    const std::vector<double> out = ppo2_update(mu, samples, adv, cfg);
    CHECK(out == mu);
}

TEST_CASE("a single positive-advantage sample pulls mu toward it") {
    SearchConfig cfg = tiny_config();
    const std::vector<double> mu = {0.4};
    const std::vector<std::vector<double>> samples = {{0.6}};
    const std::vector<double> adv = {0.5};
    const std::vector<double> out = ppo2_update(mu, samples, adv, cfg);
    CHECK(out[0] > mu[0]);
    CHECK(out[0] <= 0.99);

    const std::vector<double> neg = {-0.5};
    const std::vector<double> away = ppo2_update(mu, samples, neg, cfg);
    CHECK(away[0] < mu[0]);
    CHECK(away[0] >= 0.01);
}

TEST_CASE("projection keeps mu inside the box under extreme updates") {
    SearchConfig cfg = tiny_config();
    cfg.inner_update_lr = 50.0;
    const std::vector<double> mu = {0.5};
    const std::vector<std::vector<double>> samples = {{0.99}};
    const std::vector<double> adv = {1.0};
    const std::vector<double> out = ppo2_update(mu, samples, adv, cfg);
    CHECK(out[0] >= 0.01);
    CHECK(out[0] <= 0.99);
}

TEST_CASE("run_search bookkeeping: budget, centering, determinism") {
    const DatasetSplit data = tiny_data();
    SearchConfig cfg = tiny_config();
    const SearchResult a = run_search(cfg, data);
    CHECK(a.trainings == cfg.steps * cfg.samples_per_step);
    REQUIRE(a.history.size() == static_cast<std::size_t>(cfg.steps));
    for (const StepRecord& rec : a.history) {
        double c = 0.0;
        for (double s : rec.scores) c += s - rec.mean_score;
        CHECK(std::abs(c) < 1e-12);
        CHECK(rec.wall_ms == 0); // timing off by default for reproducible artifacts
    }

    const SearchResult b = run_search(cfg, data);
    CHECK(trajectory_jsonl(a.history) == trajectory_jsonl(b.history));
    CHECK(loss_spec_to_json(a.best_spec) == loss_spec_to_json(b.best_spec));

    cfg.jobs = 2; // thread count must not change results
    const SearchResult c = run_search(cfg, data);
    CHECK(trajectory_jsonl(a.history) == trajectory_jsonl(c.history));
}

TEST_CASE("degenerate search reduces to the identity parameters") {
    const DatasetSplit data = tiny_data();
    SearchConfig cfg = tiny_config();
    cfg.steps = 1;
    cfg.samples_per_step = 1;
    cfg.sigma = 1e-6;
    const SearchResult r = run_search(cfg, data);
    const std::vector<double> id_theta =
        identity_theta(cfg.metric.kind, cfg.family, cfg.segments);
    const std::vector<double> got = theta_of(r.best_spec.primary);
    REQUIRE(got.size() == id_theta.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - id_theta[i]) < 1e-4);
}

TEST_CASE("random search keeps mu fixed and matches the PPO2 budget") {
    const DatasetSplit data = tiny_data();
    SearchConfig cfg = tiny_config();
    const SearchResult r = random_search(cfg, data);
    CHECK(r.trainings == cfg.steps * cfg.samples_per_step);
    const std::vector<double> id_theta =
        identity_theta(cfg.metric.kind, cfg.family, cfg.segments);
    for (const StepRecord& rec : r.history) CHECK(rec.mu == id_theta);

    // best-so-far trajectory of max scores is non-decreasing by construction
    double best = 0.0;
    for (const StepRecord& rec : r.history) {
        best = std::max(best, rec.max_score);
        CHECK(best >= rec.max_score - 1e-15);
    }
}

TEST_CASE("a diverging candidate scores zero and is flagged, search continues") {
    const DatasetSplit data = tiny_data();
    SearchConfig cfg = tiny_config();
    cfg.steps = 1;
    cfg.samples_per_step = 2;
    cfg.schedule.lr_initial = 1e30; // weight decay compounds the blow-up to inf
    cfg.schedule.iterations = 16;
    const SearchResult r = run_search(cfg, data);
    REQUIRE(r.history.size() == 1);
    CHECK(!r.history[0].failures.empty());
    for (int i : r.history[0].failures) CHECK(r.history[0].scores[i] == 0.0);
}
