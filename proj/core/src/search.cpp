#include "asl/search.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <thread>

#include <json.hpp>

#include "asl/errors.hpp"
#include "asl/rng.hpp"

namespace asl {

namespace {

constexpr double kMuLo = 0.01;
constexpr double kMuHi = 0.99;
constexpr std::uint64_t kInitNetTag = 0x573030ULL; // shared w_0 stream

} // namespace

void validate(const SearchConfig& config) {
    validate(config.metric);
    require(config.steps >= 1 && config.samples_per_step >= 1, "T and M must be >= 1");
    require(config.sigma > 0.0, "sigma must be positive");
    require(config.epsilon > 0.0 && config.epsilon < 1.0, "epsilon must be in (0, 1)");
    require(config.inner_update_steps >= 1, "inner update steps must be >= 1");
    require(config.inner_update_lr > 0.0, "inner update lr must be positive");
    require(config.jobs >= 1, "jobs must be >= 1");
    require(config.net_hidden >= 1, "hidden width must be >= 1");
    validate(config.schedule);
}

std::vector<double> truncnorm_sample(std::span<const double> mu, double sigma,
                                     std::uint64_t seed) {
    SplitMix64 rng(seed);
    std::vector<double> out(mu.size());
    for (std::size_t j = 0; j < mu.size(); ++j) {
        const double a = (0.0 - mu[j]) / sigma;
        const double b = (1.0 - mu[j]) / sigma;
        const double fa = norm_cdf(a);
        const double fb = norm_cdf(b);
        const double u = rng.next_open();
        const double p = fa + u * (fb - fa);
        out[j] = std::clamp(mu[j] + sigma * norm_icdf(p), 0.0, 1.0);
    }
    return out;
}

double truncnorm_logpdf(std::span<const double> theta, std::span<const double> mu, double sigma) {
    require(theta.size() == mu.size(), "truncnorm_logpdf: dimension mismatch");
    static const double log_sqrt_2pi = 0.91893853320467274178;
    double lp = 0.0;
    for (std::size_t j = 0; j < theta.size(); ++j) {
        if (theta[j] < 0.0 || theta[j] > 1.0) return -std::numeric_limits<double>::infinity();
        const double z = (theta[j] - mu[j]) / sigma;
        const double za = (0.0 - mu[j]) / sigma;
        const double zb = (1.0 - mu[j]) / sigma;
        lp += -0.5 * z * z - log_sqrt_2pi - std::log(sigma) -
              std::log(norm_cdf(zb) - norm_cdf(za));
    }
    return lp;
}

double ppo2_term(double ratio, double advantage, double epsilon) {
    const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
    return std::min(ratio * advantage, clipped * advantage);
}

double ppo2_objective(std::span<const double> mu, std::span<const double> mu_t,
                      const std::vector<std::vector<double>>& samples,
                      std::span<const double> advantages, double sigma, double epsilon) {
    require(samples.size() == advantages.size(), "ppo2_objective: sample/advantage mismatch");
    require(!samples.empty(), "ppo2_objective: no samples");
    double obj = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double r =
            std::exp(truncnorm_logpdf(samples[i], mu, sigma) -
                     truncnorm_logpdf(samples[i], mu_t, sigma));
        obj += ppo2_term(r, advantages[i], epsilon);
    }
    return obj / static_cast<double>(samples.size());
}

namespace {

// d log p / d mu for one dimension of the truncated normal
double dlogp_dmu(double x, double mu, double sigma) {
    const double za = (0.0 - mu) / sigma;
    const double zb = (1.0 - mu) / sigma;
    const double z_mass = norm_cdf(zb) - norm_cdf(za);
    return (x - mu) / (sigma * sigma) + (norm_pdf(zb) - norm_pdf(za)) / (sigma * z_mass);
}

} // namespace

std::vector<double> ppo2_update(std::span<const double> mu_t,
                                const std::vector<std::vector<double>>& samples,
                                std::span<const double> advantages, const SearchConfig& config) {
    require(samples.size() == advantages.size() && !samples.empty(),
            "ppo2_update: sample/advantage mismatch");
    const std::size_t d = mu_t.size();
    const std::size_t m = samples.size();
    const double sigma = config.sigma;

    std::vector<double> logp_t(m);
    for (std::size_t i = 0; i < m; ++i) logp_t[i] = truncnorm_logpdf(samples[i], mu_t, sigma);

    std::vector<double> mu(mu_t.begin(), mu_t.end());
    std::vector<double> grad(d);
    for (int step = 0; step < config.inner_update_steps; ++step) {
        std::fill(grad.begin(), grad.end(), 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            if (advantages[i] == 0.0) continue;
            const double r = std::exp(truncnorm_logpdf(samples[i], mu, sigma) - logp_t[i]);
            const double clipped = std::clamp(r, 1.0 - config.epsilon, 1.0 + config.epsilon);
            const double v1 = r * advantages[i];
            const double v2 = clipped * advantages[i];
            if (v1 > v2) continue; // clipped branch active: zero gradient
            for (std::size_t j = 0; j < d; ++j)
                grad[j] += advantages[i] * r * dlogp_dmu(samples[i][j], mu[j], sigma);
        }
        bool finite = true;
        for (std::size_t j = 0; j < d; ++j) {
            mu[j] = std::clamp(mu[j] + config.inner_update_lr * grad[j] / static_cast<double>(m),
                               kMuLo, kMuHi);
            finite = finite && std::isfinite(mu[j]);
        }
        if (!finite) throw NumericError("ppo2_update: non-finite mean update");
    }
    return mu;
}

namespace {

struct CandidateOutcome {
    double score = 0.0;
    bool failed = false;
};

// trains one sampled parameter vector from the shared initial weights and
// scores it on the hold-out split with the exact target metric
CandidateOutcome score_candidate(const SearchConfig& config, const DatasetSplit& data,
                                 const TinySegNet& w0, std::span<const double> theta) {
    CandidateOutcome out;
    try {
        const MetricLoss loss =
            metric_loss_from_theta(config.metric, config.family, config.segments, theta);
        LossSpec spec;
        spec.primary = loss;
        TinySegNet net = train(w0, data.train, spec, config.schedule);
        out.score = evaluate(net, data.hold_out, config.metric);
    } catch (const std::exception&) {
        out.score = 0.0;
        out.failed = true;
    }
    return out;
}

// runs all candidates of one step, optionally across threads; results land
// in index order so the outcome is independent of scheduling
std::vector<CandidateOutcome> run_step_candidates(const SearchConfig& config,
                                                  const DatasetSplit& data, const TinySegNet& w0,
                                                  const std::vector<std::vector<double>>& thetas) {
    const int m = static_cast<int>(thetas.size());
    std::vector<CandidateOutcome> outcomes(m);
    const int workers = std::min(config.jobs, m);
    if (workers <= 1) {
        for (int i = 0; i < m; ++i) outcomes[i] = score_candidate(config, data, w0, thetas[i]);
        return outcomes;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= m) break;
                outcomes[i] = score_candidate(config, data, w0, thetas[i]);
            }
        });
    }
    for (std::thread& th : pool) th.join();
    return outcomes;
}

StepRecord make_record(int t, const std::vector<double>& mu,
                       const std::vector<CandidateOutcome>& outcomes, std::int64_t wall_ms) {
    StepRecord rec;
    rec.t = t;
    rec.mu = mu;
    rec.wall_ms = wall_ms;
    rec.scores.reserve(outcomes.size());
    double sum = 0.0, mx = 0.0;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        rec.scores.push_back(outcomes[i].score);
        sum += outcomes[i].score;
        mx = std::max(mx, outcomes[i].score);
        if (outcomes[i].failed) rec.failures.push_back(static_cast<int>(i));
    }
    rec.mean_score = sum / static_cast<double>(outcomes.size());
    rec.max_score = mx;
    return rec;
}

std::vector<double> centered_advantages(const StepRecord& rec) {
    std::vector<double> adv(rec.scores.size());
    for (std::size_t i = 0; i < adv.size(); ++i) adv[i] = rec.scores[i] - rec.mean_score;
    return adv;
}

TinySegNet shared_initial_net(const SearchConfig& config, const DatasetSplit& data) {
    require(!data.train.empty() && !data.hold_out.empty(), "search: both splits must be non-empty");
    const int in_channels = data.train[0].features.channels;
    const int num_classes = data.train[0].mask.num_classes;
    return model_init(derive_seed(config.master_seed, kInitNetTag), in_channels, config.net_hidden,
                      num_classes);
}

} // namespace

SearchResult run_search(const SearchConfig& config, const DatasetSplit& data) {
    validate(config);
    const TinySegNet w0 = shared_initial_net(config, data);

    std::vector<double> mu = identity_theta(config.metric.kind, config.family, config.segments);
    SearchResult result;
    result.history.reserve(config.steps);

    for (int t = 1; t <= config.steps; ++t) {
        const auto start = std::chrono::steady_clock::now();
        std::vector<std::vector<double>> thetas(config.samples_per_step);
        for (int i = 0; i < config.samples_per_step; ++i)
            thetas[i] = truncnorm_sample(mu, config.sigma,
                                         derive_seed(config.master_seed, t, i));
        const std::vector<CandidateOutcome> outcomes =
            run_step_candidates(config, data, w0, thetas);
        result.trainings += config.samples_per_step;

        const std::int64_t wall_ms =
            config.measure_time
                ? std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - start)
                      .count()
                : 0;
        result.history.push_back(make_record(t, mu, outcomes, wall_ms));

        if (t < config.steps) {
            const std::vector<double> adv = centered_advantages(result.history.back());
            mu = ppo2_update(mu, thetas, adv, config);
        }
    }

    // the searched parameters are the step mean with the best average score
    std::size_t best = 0;
    for (std::size_t i = 1; i < result.history.size(); ++i)
        if (result.history[i].mean_score > result.history[best].mean_score) best = i;
    result.best_spec.primary = metric_loss_from_theta(config.metric, config.family,
                                                      config.segments, result.history[best].mu);
    return result;
}

SearchResult random_search(const SearchConfig& config, const DatasetSplit& data) {
    validate(config);
    const TinySegNet w0 = shared_initial_net(config, data);

    const std::vector<double> mu =
        identity_theta(config.metric.kind, config.family, config.segments);
    SearchResult result;
    result.history.reserve(config.steps);

    std::vector<double> best_theta = mu;
    double best_score = -1.0;
    for (int t = 1; t <= config.steps; ++t) {
        const auto start = std::chrono::steady_clock::now();
        std::vector<std::vector<double>> thetas(config.samples_per_step);
        for (int i = 0; i < config.samples_per_step; ++i)
            thetas[i] = truncnorm_sample(mu, config.sigma,
                                         derive_seed(config.master_seed, t, i));
        const std::vector<CandidateOutcome> outcomes =
            run_step_candidates(config, data, w0, thetas);
        result.trainings += config.samples_per_step;

        for (int i = 0; i < config.samples_per_step; ++i) {
            if (outcomes[i].score > best_score) {
                best_score = outcomes[i].score;
                best_theta = thetas[i];
            }
        }
        const std::int64_t wall_ms =
            config.measure_time
                ? std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - start)
                      .count()
                : 0;
        result.history.push_back(make_record(t, mu, outcomes, wall_ms));
    }

    result.best_spec.primary =
        metric_loss_from_theta(config.metric, config.family, config.segments, best_theta);
    return result;
}

std::string trajectory_jsonl(const std::vector<StepRecord>& history) {
    std::string out;
    for (const StepRecord& rec : history) {
        nlohmann::json j;
        j["t"] = rec.t;
        j["mu"] = rec.mu;
        j["scores"] = rec.scores;
        j["mean_score"] = rec.mean_score;
        j["max_score"] = rec.max_score;
        j["wall_ms"] = rec.wall_ms;
        if (!rec.failures.empty()) j["failures"] = rec.failures;
        out += j.dump();
        out += '\n';
    }
    return out;
}

} // namespace asl
