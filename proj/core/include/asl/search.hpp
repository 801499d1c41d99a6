#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "asl/loss_spec.hpp"
#include "asl/net.hpp"
#include "asl/synth.hpp"

namespace asl {

struct SearchConfig {
    MetricId metric;
    CurveFamily family = CurveFamily::Bezier;
    int segments = 2;
    int steps = 10;            // T
    int samples_per_step = 8;  // M
    double sigma = 0.2;
    double epsilon = 0.1;      // PPO clip
    int inner_update_steps = 100;
    double inner_update_lr = 0.02;
    TrainSchedule schedule;    // per-candidate inner training
    int net_hidden = 16;
    std::uint64_t master_seed = 1;
    int jobs = 1;              // concurrent candidate trainings
    bool measure_time = false; // leave wall_ms at 0 for byte-reproducible runs
};

void validate(const SearchConfig& config);

struct StepRecord {
    int t = 0;
    std::vector<double> mu;
    std::vector<double> scores;
    double mean_score = 0.0;
    double max_score = 0.0;
    std::int64_t wall_ms = 0;
    std::vector<int> failures; // candidate indices whose training aborted
};

struct SearchResult {
    LossSpec best_spec;
    std::vector<StepRecord> history;
    int trainings = 0; // inner trainings performed (budget accounting)
};

// Per-dimension inverse-CDF sample of N(mu_j, sigma^2) truncated to [0, 1].
std::vector<double> truncnorm_sample(std::span<const double> mu, double sigma,
                                     std::uint64_t seed);

// Sum over dimensions of the truncated-normal log density; -inf outside the
// unit box.
double truncnorm_logpdf(std::span<const double> theta, std::span<const double> mu, double sigma);

// Clipped PPO2 term: min(r*A, clip(r, 1-eps, 1+eps)*A).
double ppo2_term(double ratio, double advantage, double epsilon);

// (1/M) sum_i of ppo2_term with likelihood ratios p(theta_i; mu)/p(theta_i; mu_t).
double ppo2_objective(std::span<const double> mu, std::span<const double> mu_t,
                      const std::vector<std::vector<double>>& samples,
                      std::span<const double> advantages, double sigma, double epsilon);

// Projected gradient ascent on ppo2_objective; mu stays in [0.01, 0.99]^d.
// Clipped terms contribute zero gradient. Equal rewards leave mu unchanged.
std::vector<double> ppo2_update(std::span<const double> mu_t,
                                const std::vector<std::vector<double>>& samples,
                                std::span<const double> advantages, const SearchConfig& config);

// Full outer loop: sample M candidates around mu_t, train each from a shared
// initial network, score on the hold-out split with the target metric,
// PPO2-update mu. Returns the loss built from the mu_t with the highest
// step-mean hold-out score. A failed candidate training scores 0 and is
// flagged; it does not abort the search.
SearchResult run_search(const SearchConfig& config, const DatasetSplit& data);

// Same protocol and budget, but every candidate is drawn from the initial
// distribution and mu never moves. Returns the best-scoring candidate found.
SearchResult random_search(const SearchConfig& config, const DatasetSplit& data);

// One JSON object per step: {t, mu, scores, mean_score, max_score, wall_ms}
// plus "failures" when any candidate failed.
std::string trajectory_jsonl(const std::vector<StepRecord>& history);

} // namespace asl
