// asl: search, train and evaluate parameterized surrogate losses for
// segmentation metrics on synthetic scenes.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "asl/errors.hpp"
#include "asl/loss_spec.hpp"
#include "asl/metrics.hpp"
#include "asl/net.hpp"
#include "asl/rng.hpp"
#include "asl/search.hpp"
#include "asl/surrogate.hpp"
#include "asl/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

constexpr std::uint64_t kScheduleTag = 0x54524eULL; // inner-training shuffle stream
constexpr std::uint64_t kEvalSetTag = 0x4556ULL;    // fresh evaluation dataset

int default_jobs() {
    if (const char* env = std::getenv("ASL_JOBS")) {
        try {
            const int j = std::stoi(env);
            if (j >= 1) return j;
        } catch (...) {
        }
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// JSON config file merged under the command-line flags; flags win, unknown
// keys are rejected.
class ConfigFile {
public:
    void load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw std::invalid_argument("cannot open config file: " + path);
        try {
            in >> data_;
        } catch (const json::exception& e) {
            throw std::invalid_argument("malformed config JSON: " + std::string(e.what()));
        }
        if (!data_.is_object()) throw std::invalid_argument("config file must hold a JSON object");
        loaded_ = true;
    }

    template <class T>
    void apply(const CLI::App& app, const std::string& key, T& value) {
        if (!loaded_) return;
        const auto it = data_.find(key);
        if (it == data_.end()) return;
        consumed_.insert(key);
        const CLI::Option* opt = app.get_option_no_throw("--" + key);
        if (opt != nullptr && opt->count() > 0) return;
        try {
            value = it->get<T>();
        } catch (const json::exception&) {
            throw std::invalid_argument("config key '" + key + "' has the wrong type");
        }
    }

    void finish() const {
        if (!loaded_) return;
        for (const auto& item : data_.items())
            if (!consumed_.count(item.key()))
                throw std::invalid_argument("unknown config key '" + item.key() + "'");
    }

private:
    json data_;
    std::set<std::string> consumed_;
    bool loaded_ = false;
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

asl::MetricId metric_from_flags(const std::string& name, int tolerance) {
    asl::MetricId id = asl::make_metric(asl::metric_from_name(name));
    if (tolerance >= 0) id.boundary_tolerance_px = tolerance;
    asl::validate(id);
    return id;
}

int family_default_segments(asl::CurveFamily family) {
    return family == asl::CurveFamily::Bezier ? 2 : 5;
}

std::vector<asl::Scene> all_scenes(const asl::DatasetSplit& split) {
    std::vector<asl::Scene> scenes = split.train;
    scenes.insert(scenes.end(), split.hold_out.begin(), split.hold_out.end());
    return scenes;
}

// ---- gen-data --------------------------------------------------------------

struct GenDataArgs {
    std::uint64_t seed = 7;
    int count = 100;
    int size = 16;
    int classes = 3;
    double imbalance = 0.25;
    std::string out;
    std::string config;
    bool print_config = false;
};

json to_json(const GenDataArgs& a) {
    json j;
    j["seed"] = a.seed;
    j["count"] = a.count;
    j["size"] = a.size;
    j["classes"] = a.classes;
    j["imbalance"] = a.imbalance;
    j["out"] = a.out;
    return j;
}

int cmd_gen_data(GenDataArgs& a, const CLI::App& app) {
    ConfigFile cfg;
    if (!a.config.empty()) cfg.load(a.config);
    cfg.apply(app, "seed", a.seed);
    cfg.apply(app, "count", a.count);
    cfg.apply(app, "size", a.size);
    cfg.apply(app, "classes", a.classes);
    cfg.apply(app, "imbalance", a.imbalance);
    cfg.apply(app, "out", a.out);
    cfg.finish();

    if (a.print_config) {
        std::cout << to_json(a).dump(2) << "\n";
        return 0;
    }
    if (a.out.empty()) throw std::invalid_argument("--out is required");

    asl::SceneParams params;
    params.size_px = a.size;
    params.num_classes = a.classes;
    params.imbalance = a.imbalance;
    asl::validate(params);

    const asl::DatasetSplit split = asl::gen_dataset(a.seed, a.count, params);
    asl::save_dataset(a.out, split, params);
    std::cout << "wrote " << split.train.size() << " train + " << split.hold_out.size()
              << " holdout scenes (seed " << a.seed << ") to " << a.out << "\n";
    return 0;
}

// ---- search ----------------------------------------------------------------

struct SearchArgs {
    std::string data;
    std::string metric;
    int tolerance = -1; // -1: per-metric default
    std::string family = "bezier";
    int segments = 0; // 0: per-family default
    int steps = 10;
    int samples = 8;
    double sigma = 0.2;
    double epsilon = 0.1;
    int update_steps = 100;
    double update_lr = 0.02;
    std::string strategy = "ppo2";
    std::uint64_t seed = 1;
    int iters = 150;
    int batch = 8;
    double lr = 0.1;
    int hidden = 16;
    int jobs = default_jobs();
    std::string out = ".";
    bool timing = false;
    std::string config;
    bool print_config = false;
};

json to_json(const SearchArgs& a) {
    json j;
    j["data"] = a.data;
    j["metric"] = a.metric;
    j["tolerance"] = a.tolerance;
    j["family"] = a.family;
    j["segments"] = a.segments;
    j["steps"] = a.steps;
    j["samples"] = a.samples;
    j["sigma"] = a.sigma;
    j["epsilon"] = a.epsilon;
    j["update-steps"] = a.update_steps;
    j["update-lr"] = a.update_lr;
    j["strategy"] = a.strategy;
    j["seed"] = a.seed;
    j["iters"] = a.iters;
    j["batch"] = a.batch;
    j["lr"] = a.lr;
    j["hidden"] = a.hidden;
    j["jobs"] = a.jobs;
    j["out"] = a.out;
    j["timing"] = a.timing;
    return j;
}

int cmd_search(SearchArgs& a, const CLI::App& app) {
    ConfigFile cfg;
    if (!a.config.empty()) cfg.load(a.config);
    cfg.apply(app, "data", a.data);
    cfg.apply(app, "metric", a.metric);
    cfg.apply(app, "tolerance", a.tolerance);
    cfg.apply(app, "family", a.family);
    cfg.apply(app, "segments", a.segments);
    cfg.apply(app, "steps", a.steps);
    cfg.apply(app, "samples", a.samples);
    cfg.apply(app, "sigma", a.sigma);
    cfg.apply(app, "epsilon", a.epsilon);
    cfg.apply(app, "update-steps", a.update_steps);
    cfg.apply(app, "update-lr", a.update_lr);
    cfg.apply(app, "strategy", a.strategy);
    cfg.apply(app, "seed", a.seed);
    cfg.apply(app, "iters", a.iters);
    cfg.apply(app, "batch", a.batch);
    cfg.apply(app, "lr", a.lr);
    cfg.apply(app, "hidden", a.hidden);
    cfg.apply(app, "jobs", a.jobs);
    cfg.apply(app, "out", a.out);
    cfg.apply(app, "timing", a.timing);
    cfg.finish();

    if (a.print_config) {
        std::cout << to_json(a).dump(2) << "\n";
        return 0;
    }
    if (a.data.empty()) throw std::invalid_argument("--data is required");
    if (a.metric.empty()) throw std::invalid_argument("--metric is required");
    if (a.strategy != "ppo2" && a.strategy != "random")
        throw std::invalid_argument("--strategy must be 'ppo2' or 'random'");

    const asl::LoadedDataset ds = asl::load_dataset(a.data);

    asl::SearchConfig config;
    config.metric = metric_from_flags(a.metric, a.tolerance);
    config.family = asl::family_from_name(a.family);
    config.segments = a.segments > 0 ? a.segments : family_default_segments(config.family);
    config.steps = a.steps;
    config.samples_per_step = a.samples;
    config.sigma = a.sigma;
    config.epsilon = a.epsilon;
    config.inner_update_steps = a.update_steps;
    config.inner_update_lr = a.update_lr;
    config.master_seed = a.seed;
    config.jobs = a.jobs;
    config.net_hidden = a.hidden;
    config.measure_time = a.timing;
    config.schedule.iterations = a.iters;
    config.schedule.batch_size = a.batch;
    config.schedule.lr_initial = a.lr;
    config.schedule.seed = asl::derive_seed(a.seed, kScheduleTag);
    asl::validate(config);

    const asl::SearchResult result = a.strategy == "ppo2" ? asl::run_search(config, ds.split)
                                                          : asl::random_search(config, ds.split);

    fs::create_directories(a.out);
    const fs::path loss_path = fs::path(a.out) / "loss.json";
    const fs::path traj_path = fs::path(a.out) / "trajectory.jsonl";
    asl::save_loss_spec(loss_path, result.best_spec);
    write_text(traj_path, asl::trajectory_jsonl(result.history));

    double best_mean = 0.0;
    int best_t = 1;
    for (const asl::StepRecord& rec : result.history) {
        if (rec.mean_score > best_mean) {
            best_mean = rec.mean_score;
            best_t = rec.t;
        }
    }
    std::cout << "strategy " << a.strategy << ", seed " << a.seed << ": " << result.trainings
              << " trainings, best step " << best_t << " (mean " << best_mean << ")\n"
              << "wrote " << loss_path.string() << " and " << traj_path.string() << "\n";
    return 0;
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
    std::string data;
    std::vector<std::string> losses;
    std::string weights;
    std::uint64_t seed = 1;
    int iters = 300;
    int batch = 8;
    double lr = 0.1;
    int hidden = 16;
    std::uint64_t eval_seed = 0; // 0: derived from --seed
    int eval_count = 0;          // 0: holdout size
    std::string out = ".";
    std::string config;
    bool print_config = false;
};

json to_json(const TrainArgs& a) {
    json j;
    j["data"] = a.data;
    j["loss"] = a.losses;
    j["weights"] = a.weights;
    j["seed"] = a.seed;
    j["iters"] = a.iters;
    j["batch"] = a.batch;
    j["lr"] = a.lr;
    j["hidden"] = a.hidden;
    j["eval-seed"] = a.eval_seed;
    j["eval-count"] = a.eval_count;
    j["out"] = a.out;
    return j;
}

asl::LossSpec assemble_loss(const std::vector<std::string>& files, const std::string& weights) {
    if (files.empty()) throw std::invalid_argument("--loss is required");
    if (files.size() > 2) throw std::invalid_argument("at most two --loss files are supported");
    const asl::LossSpec first = asl::load_loss_spec(files[0]);
    if (files.size() == 1) {
        if (!weights.empty())
            throw std::invalid_argument("--weights needs two --loss files");
        return first;
    }
    if (first.secondary)
        throw std::invalid_argument("combined loss files cannot be combined again");
    const asl::LossSpec second = asl::load_loss_spec(files[1]);
    if (second.secondary)
        throw std::invalid_argument("combined loss files cannot be combined again");
    double w1 = 0.5, w2 = 0.5;
    if (!weights.empty()) {
        std::istringstream ss(weights);
        char comma = 0;
        if (!(ss >> w1 >> comma >> w2) || comma != ',')
            throw std::invalid_argument("--weights expects 'w1,w2'");
    }
    return asl::combined_loss(first.primary, w1, second.primary, w2);
}

int cmd_train(TrainArgs& a, const CLI::App& app) {
    ConfigFile cfg;
    if (!a.config.empty()) cfg.load(a.config);
    cfg.apply(app, "data", a.data);
    cfg.apply(app, "loss", a.losses);
    cfg.apply(app, "weights", a.weights);
    cfg.apply(app, "seed", a.seed);
    cfg.apply(app, "iters", a.iters);
    cfg.apply(app, "batch", a.batch);
    cfg.apply(app, "lr", a.lr);
    cfg.apply(app, "hidden", a.hidden);
    cfg.apply(app, "eval-seed", a.eval_seed);
    cfg.apply(app, "eval-count", a.eval_count);
    cfg.apply(app, "out", a.out);
    cfg.finish();

    if (a.print_config) {
        std::cout << to_json(a).dump(2) << "\n";
        return 0;
    }
    if (a.data.empty()) throw std::invalid_argument("--data is required");

    const asl::LossSpec spec = assemble_loss(a.losses, a.weights);
    const asl::LoadedDataset ds = asl::load_dataset(a.data);
    const std::vector<asl::Scene> full = all_scenes(ds.split);

    asl::TrainSchedule schedule;
    schedule.iterations = a.iters;
    schedule.batch_size = a.batch;
    schedule.lr_initial = a.lr;
    schedule.seed = asl::derive_seed(a.seed, kScheduleTag);

    const int in_channels = full[0].features.channels;
    const int num_classes = full[0].mask.num_classes;
    asl::TinySegNet net = asl::model_init(a.seed, in_channels, a.hidden, num_classes);
    net = asl::train(std::move(net), full, spec, schedule);

    // fresh evaluation scenes, disjoint from training by construction
    const std::uint64_t eval_seed =
        a.eval_seed != 0 ? a.eval_seed : asl::derive_seed(a.seed, kEvalSetTag);
    const int eval_count =
        a.eval_count > 0 ? a.eval_count
                         : std::max<int>(4, static_cast<int>(ds.split.hold_out.size()));
    std::vector<asl::Scene> eval_scenes;
    eval_scenes.reserve(eval_count);
    for (int i = 0; i < eval_count; ++i)
        eval_scenes.push_back(asl::gen_scene(asl::derive_seed(eval_seed, 0x5343454eULL, i),
                                             ds.params));

    fs::create_directories(a.out);
    const fs::path ckpt_path = fs::path(a.out) / "checkpoint.asln";
    asl::save_checkpoint(ckpt_path, net);

    asl::DatasetSplit eval_split;
    eval_split.seed = eval_seed;
    eval_split.train = eval_scenes;
    asl::save_dataset(fs::path(a.out) / "evalset", eval_split, ds.params);

    json report;
    report["checkpoint"] = ckpt_path.string();
    report["eval"] = {{"count", eval_count}, {"seed", eval_seed}, {"dir", "evalset"}};
    report["losses"] = a.losses;
    report["schedule"] = {{"iterations", a.iters},
                          {"batch_size", a.batch},
                          {"lr_initial", a.lr},
                          {"seed", a.seed}};
    json scores;
    for (asl::Metric kind : {asl::Metric::GAcc, asl::Metric::MAcc, asl::Metric::MIoU,
                             asl::Metric::FWIoU, asl::Metric::BIoU, asl::Metric::BF1})
        scores[asl::metric_name(kind)] = asl::evaluate(net, eval_scenes, asl::make_metric(kind));
    report["metrics"] = scores;
    write_text(fs::path(a.out) / "report.json", report.dump(2) + "\n");

    std::cout << "trained on " << full.size() << " scenes; evaluation on " << eval_count
              << " fresh scenes (seed " << eval_seed << "):\n";
    for (const auto& item : scores.items())
        std::cout << "  " << item.key() << " = " << item.value().get<double>() << "\n";
    std::cout << "wrote " << ckpt_path.string() << " and report.json\n";
    return 0;
}

// ---- eval ------------------------------------------------------------------

struct EvalArgs {
    std::string checkpoint;
    std::string data;
    std::string metric;
    int tolerance = -1;
    std::string split = "all";
    std::string config;
    bool print_config = false;
};

json to_json(const EvalArgs& a) {
    json j;
    j["checkpoint"] = a.checkpoint;
    j["data"] = a.data;
    j["metric"] = a.metric;
    j["tolerance"] = a.tolerance;
    j["split"] = a.split;
    return j;
}

int cmd_eval(EvalArgs& a, const CLI::App& app) {
    ConfigFile cfg;
    if (!a.config.empty()) cfg.load(a.config);
    cfg.apply(app, "checkpoint", a.checkpoint);
    cfg.apply(app, "data", a.data);
    cfg.apply(app, "metric", a.metric);
    cfg.apply(app, "tolerance", a.tolerance);
    cfg.apply(app, "split", a.split);
    cfg.finish();

    if (a.print_config) {
        std::cout << to_json(a).dump(2) << "\n";
        return 0;
    }
    if (a.checkpoint.empty()) throw std::invalid_argument("--checkpoint is required");
    if (a.data.empty()) throw std::invalid_argument("--data is required");
    if (a.metric.empty()) throw std::invalid_argument("--metric is required");

    const asl::TinySegNet net = asl::load_checkpoint(a.checkpoint);
    const asl::LoadedDataset ds = asl::load_dataset(a.data);
    std::vector<asl::Scene> scenes;
    if (a.split == "train")
        scenes = ds.split.train;
    else if (a.split == "holdout")
        scenes = ds.split.hold_out;
    else if (a.split == "all")
        scenes = all_scenes(ds.split);
    else
        throw std::invalid_argument("--split must be train, holdout or all");

    const double score = asl::evaluate(net, scenes, metric_from_flags(a.metric, a.tolerance));
    std::printf("%.6f\n", score);
    return 0;
}

// ---- export-curve ----------------------------------------------------------

struct ExportArgs {
    std::string loss;
    std::string out = ".";
    std::string config;
    bool print_config = false;
};

json to_json(const ExportArgs& a) {
    json j;
    j["loss"] = a.loss;
    j["out"] = a.out;
    return j;
}

void export_slots(const asl::MetricLoss& loss, const fs::path& dir, int& index) {
    for (const asl::LogicalOpSlot& slot : loss.slots) {
        std::string csv = "y,g\n";
        char line[64];
        for (int i = 0; i <= 1000; ++i) {
            const double y = static_cast<double>(i) / 1000.0;
            std::snprintf(line, sizeof(line), "%.17g,%.17g\n", y, slot.curve.eval(y));
            csv += line;
        }
        write_text(dir / ("slot_" + std::to_string(index) + ".csv"), csv);
        ++index;
    }
}

int cmd_export_curve(ExportArgs& a, const CLI::App& app) {
    ConfigFile cfg;
    if (!a.config.empty()) cfg.load(a.config);
    cfg.apply(app, "loss", a.loss);
    cfg.apply(app, "out", a.out);
    cfg.finish();

    if (a.print_config) {
        std::cout << to_json(a).dump(2) << "\n";
        return 0;
    }
    if (a.loss.empty()) throw std::invalid_argument("--loss is required");

    const asl::LossSpec spec = asl::load_loss_spec(a.loss);
    fs::create_directories(a.out);
    int index = 0;
    export_slots(spec.primary, a.out, index);
    if (spec.secondary) export_slots(*spec.secondary, a.out, index);
    std::cout << "wrote " << index << " curve files to " << a.out << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"surrogate-loss search for segmentation metrics"};
    app.require_subcommand(1);

    GenDataArgs gen_args;
    CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic dataset directory");
    gen->add_option("--seed", gen_args.seed, "master seed");
    gen->add_option("--count", gen_args.count, "number of scenes")->check(CLI::Range(4, 1000000));
    gen->add_option("--size", gen_args.size, "scene side length in pixels");
    gen->add_option("--classes", gen_args.classes, "number of classes")->check(CLI::Range(2, 5));
    gen->add_option("--imbalance", gen_args.imbalance, "foreground area fraction");
    gen->add_option("--out", gen_args.out, "output directory");
    gen->add_option("--config", gen_args.config, "JSON config file");
    gen->add_flag("--print-config", gen_args.print_config, "print effective config and exit");

    SearchArgs search_args;
    CLI::App* search = app.add_subcommand("search", "search surrogate-loss parameters");
    search->add_option("--data", search_args.data, "dataset directory");
    search->add_option("--metric", search_args.metric, "target metric")
        ->check(CLI::IsMember({"gacc", "macc", "miou", "fwiou", "biou", "bf1"}));
    search->add_option("--tolerance", search_args.tolerance, "boundary tolerance in pixels");
    search->add_option("--family", search_args.family, "curve family")
        ->check(CLI::IsMember({"bezier", "linear"}));
    search->add_option("--segments", search_args.segments, "curve segments (default per family)");
    search->add_option("--steps", search_args.steps, "outer steps T");
    search->add_option("--samples", search_args.samples, "candidates per step M");
    search->add_option("--sigma", search_args.sigma, "sampling stddev");
    search->add_option("--epsilon", search_args.epsilon, "PPO clip threshold");
    search->add_option("--update-steps", search_args.update_steps, "mean-update ascent steps");
    search->add_option("--update-lr", search_args.update_lr, "mean-update learning rate");
    search->add_option("--strategy", search_args.strategy, "ppo2 or random");
    search->add_option("--seed", search_args.seed, "master seed");
    search->add_option("--iters", search_args.iters, "inner training iterations");
    search->add_option("--batch", search_args.batch, "inner batch size");
    search->add_option("--lr", search_args.lr, "inner learning rate");
    search->add_option("--hidden", search_args.hidden, "hidden channels");
    search->add_option("--jobs", search_args.jobs, "concurrent candidate trainings");
    search->add_option("--out", search_args.out, "output directory");
    search->add_flag("--timing", search_args.timing, "record wall-clock times in the trajectory");
    search->add_option("--config", search_args.config, "JSON config file");
    search->add_flag("--print-config", search_args.print_config,
                     "print effective config and exit");

    TrainArgs train_args;
    CLI::App* train = app.add_subcommand("train", "train with a saved loss spec");
    train->add_option("--data", train_args.data, "dataset directory");
    train->add_option("--loss", train_args.losses, "loss spec JSON (repeat to combine two)");
    train->add_option("--weights", train_args.weights, "combination weights 'w1,w2'");
    train->add_option("--seed", train_args.seed, "master seed");
    train->add_option("--iters", train_args.iters, "training iterations");
    train->add_option("--batch", train_args.batch, "batch size");
    train->add_option("--lr", train_args.lr, "learning rate");
    train->add_option("--hidden", train_args.hidden, "hidden channels");
    train->add_option("--eval-seed", train_args.eval_seed, "evaluation set seed");
    train->add_option("--eval-count", train_args.eval_count, "evaluation scene count");
    train->add_option("--out", train_args.out, "output directory");
    train->add_option("--config", train_args.config, "JSON config file");
    train->add_flag("--print-config", train_args.print_config, "print effective config and exit");

    EvalArgs eval_args;
    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    eval->add_option("--checkpoint", eval_args.checkpoint, "checkpoint file");
    eval->add_option("--data", eval_args.data, "dataset directory");
    eval->add_option("--metric", eval_args.metric, "metric name")
        ->check(CLI::IsMember({"gacc", "macc", "miou", "fwiou", "biou", "bf1"}));
    eval->add_option("--tolerance", eval_args.tolerance, "boundary tolerance in pixels");
    eval->add_option("--split", eval_args.split, "train, holdout or all");
    eval->add_option("--config", eval_args.config, "JSON config file");
    eval->add_flag("--print-config", eval_args.print_config, "print effective config and exit");

    ExportArgs export_args;
    CLI::App* exp = app.add_subcommand("export-curve", "sample the g curves of a loss spec");
    exp->add_option("--loss", export_args.loss, "loss spec JSON file");
    exp->add_option("--out", export_args.out, "output directory");
    exp->add_option("--config", export_args.config, "JSON config file");
    exp->add_flag("--print-config", export_args.print_config, "print effective config and exit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (gen->parsed()) return cmd_gen_data(gen_args, *gen);
        if (search->parsed()) return cmd_search(search_args, *search);
        if (train->parsed()) return cmd_train(train_args, *train);
        if (eval->parsed()) return cmd_eval(eval_args, *eval);
        if (exp->parsed()) return cmd_export_curve(export_args, *exp);
    } catch (const asl::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
