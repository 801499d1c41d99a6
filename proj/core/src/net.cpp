#include "asl/net.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "asl/errors.hpp"
#include "asl/metrics.hpp"
#include "asl/rng.hpp"
#include "asl/surrogate.hpp"

namespace asl {

namespace {

std::size_t kidx(int out_c, int in_c, int in_channels, int tap) {
    return (static_cast<std::size_t>(out_c) * in_channels + in_c) * 9 + tap;
}

// conv3x3 with replicate padding
void conv3x3(const Tensor3& in, const std::vector<double>& w, const std::vector<double>& b,
             int out_channels, Tensor3& out) {
    const int h = in.height, wd = in.width, ic = in.channels;
    for (int o = 0; o < out_channels; ++o) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < wd; ++x) {
                double sum = b[o];
                for (int c = 0; c < ic; ++c) {
                    int tap = 0;
                    for (int dy = -1; dy <= 1; ++dy) {
                        const int sy = std::clamp(y + dy, 0, h - 1);
                        for (int dx = -1; dx <= 1; ++dx, ++tap) {
                            const int sx = std::clamp(x + dx, 0, wd - 1);
                            sum += w[kidx(o, c, ic, tap)] * in.at(c, sy, sx);
                        }
                    }
                }
                out.at(o, y, x) = sum;
            }
        }
    }
}

// gradient of conv3x3 w.r.t. weights, biases and (optionally) its input
void conv3x3_backward(const Tensor3& in, const std::vector<double>& w, int out_channels,
                      const Tensor3& dout, std::vector<double>& dw, std::vector<double>& db,
                      Tensor3* din) {
    const int h = in.height, wd = in.width, ic = in.channels;
    for (int o = 0; o < out_channels; ++o) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < wd; ++x) {
                const double g = dout.at(o, y, x);
                if (g == 0.0) continue;
                db[o] += g;
                for (int c = 0; c < ic; ++c) {
                    int tap = 0;
                    for (int dy = -1; dy <= 1; ++dy) {
                        const int sy = std::clamp(y + dy, 0, h - 1);
                        for (int dx = -1; dx <= 1; ++dx, ++tap) {
                            const int sx = std::clamp(x + dx, 0, wd - 1);
                            dw[kidx(o, c, ic, tap)] += g * in.at(c, sy, sx);
                            if (din) din->at(c, sy, sx) += g * w[kidx(o, c, ic, tap)];
                        }
                    }
                }
            }
        }
    }
}

} // namespace

TinySegNet model_init(std::uint64_t seed, int in_channels, int hidden, int num_classes) {
    require(in_channels >= 1 && hidden >= 1 && num_classes >= 2, "model dims must be positive");
    TinySegNet net;
    net.in_channels = in_channels;
    net.hidden = hidden;
    net.num_classes = num_classes;
    net.w1.resize(static_cast<std::size_t>(hidden) * in_channels * 9);
    net.b1.assign(hidden, 0.0);
    net.w2.resize(static_cast<std::size_t>(num_classes) * hidden * 9);
    net.b2.assign(num_classes, 0.0);

    SplitMix64 rng(derive_seed(seed, 0x4e4554ULL)); // one stream for all weights
    const double s1 = std::sqrt(2.0 / (in_channels * 9.0));
    for (double& w : net.w1) w = s1 * rng.next_normal();
    const double s2 = std::sqrt(2.0 / (hidden * 9.0));
    for (double& w : net.w2) w = s2 * rng.next_normal();
    return net;
}

LogitMap forward(const TinySegNet& net, const Tensor3& features, ForwardCache* cache) {
    require(features.channels == net.in_channels, "forward: feature channel mismatch");
    Tensor3 pre1 = make_tensor(net.hidden, features.height, features.width);
    conv3x3(features, net.w1, net.b1, net.hidden, pre1);
    Tensor3 act1 = pre1;
    for (double& v : act1.v) v = std::max(v, 0.0);
    LogitMap logits = make_tensor(net.num_classes, features.height, features.width);
    conv3x3(act1, net.w2, net.b2, net.num_classes, logits);
    if (cache) {
        cache->pre1 = std::move(pre1);
        cache->act1 = std::move(act1);
    }
    return logits;
}

NetGrads make_grads(const TinySegNet& net) {
    NetGrads g;
    g.w1.assign(net.w1.size(), 0.0);
    g.b1.assign(net.b1.size(), 0.0);
    g.w2.assign(net.w2.size(), 0.0);
    g.b2.assign(net.b2.size(), 0.0);
    return g;
}

void backward(const TinySegNet& net, const Tensor3& features, const ForwardCache& cache,
              const LogitMap& dlogits, NetGrads& accum) {
    require(dlogits.channels == net.num_classes && dlogits.height == features.height &&
                dlogits.width == features.width,
            "backward: upstream gradient shape mismatch");
    Tensor3 dact1 = make_tensor(net.hidden, features.height, features.width);
    conv3x3_backward(cache.act1, net.w2, net.num_classes, dlogits, accum.w2, accum.b2, &dact1);
    // ReLU gate
    for (std::size_t i = 0; i < dact1.v.size(); ++i)
        if (cache.pre1.v[i] <= 0.0) dact1.v[i] = 0.0;
    conv3x3_backward(features, net.w1, net.hidden, dact1, accum.w1, accum.b1, nullptr);
}

void validate(const TrainSchedule& schedule) {
    require(schedule.iterations >= 0, "iterations must be >= 0");
    require(schedule.batch_size >= 1, "batch size must be >= 1");
    require(schedule.lr_initial > 0.0, "learning rate must be positive");
    require(schedule.momentum >= 0.0 && schedule.momentum < 1.0, "momentum must be in [0, 1)");
    require(schedule.weight_decay >= 0.0, "weight decay must be >= 0");
}

void sgd_step(TinySegNet& net, const NetGrads& grads, NetGrads& velocity, double lr,
              const TrainSchedule& schedule) {
    auto update = [&](std::vector<double>& p, const std::vector<double>& g, std::vector<double>& v) {
        for (std::size_t i = 0; i < p.size(); ++i) {
            v[i] = schedule.momentum * v[i] + (g[i] + schedule.weight_decay * p[i]);
            p[i] -= lr * v[i];
        }
    };
    update(net.w1, grads.w1, velocity.w1);
    update(net.b1, grads.b1, velocity.b1);
    update(net.w2, grads.w2, velocity.w2);
    update(net.b2, grads.b2, velocity.b2);
}

TinySegNet train(TinySegNet net, std::span<const Scene> data, const LossSpec& spec,
                 const TrainSchedule& schedule) {
    validate(schedule);
    require(!data.empty(), "train: empty dataset");
    if (schedule.iterations == 0) return net;

    NetGrads velocity = make_grads(net);
    SplitMix64 shuffle_rng(derive_seed(schedule.seed, 0x53484655ULL));
    std::vector<int> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::size_t pos = order.size(); // trigger a shuffle on first use

    std::vector<LogitMap> logits(schedule.batch_size);
    std::vector<ForwardCache> caches(schedule.batch_size);
    std::vector<LabelMask> gts(schedule.batch_size);
    std::vector<int> batch(schedule.batch_size);

    for (int t = 0; t < schedule.iterations; ++t) {
        for (int b = 0; b < schedule.batch_size; ++b) {
            if (pos == order.size()) {
                for (std::size_t i = order.size() - 1; i > 0; --i)
                    std::swap(order[i], order[shuffle_rng.next_below(i + 1)]);
                pos = 0;
            }
            batch[b] = order[pos++];
            const Scene& scene = data[batch[b]];
            logits[b] = forward(net, scene.features, &caches[b]);
            gts[b] = scene.mask;
        }

        LossGrad lg;
        try {
            lg = surrogate_loss_and_grad(spec, logits, gts);
        } catch (const NumericError& e) {
            throw NumericError(std::string(e.what()) + " (training step " + std::to_string(t) + ")");
        }

        NetGrads grads = make_grads(net);
        for (int b = 0; b < schedule.batch_size; ++b)
            backward(net, data[batch[b]].features, caches[b], lg.dlogits[b], grads);

        const double lr =
            schedule.lr_initial *
            std::pow(1.0 - static_cast<double>(t) / schedule.iterations, schedule.lr_poly_power);
        sgd_step(net, grads, velocity, lr, schedule);
    }
    return net;
}

LabelMask argmax_mask(const LogitMap& logits) {
    LabelMask mask = make_mask(logits.height, logits.width, logits.channels);
    const int hw = logits.height * logits.width;
    for (int i = 0; i < hw; ++i) {
        int best = 0;
        double best_v = logits.v[i];
        for (int c = 1; c < logits.channels; ++c) {
            const double v = logits.v[static_cast<std::size_t>(c) * hw + i];
            if (v > best_v) {
                best_v = v;
                best = c;
            }
        }
        mask.labels[i] = static_cast<std::uint8_t>(best);
    }
    return mask;
}

double evaluate(const TinySegNet& net, std::span<const Scene> data, const MetricId& metric) {
    require(!data.empty(), "evaluate: empty dataset");
    std::vector<LabelMask> preds, gts;
    preds.reserve(data.size());
    gts.reserve(data.size());
    for (const Scene& scene : data) {
        preds.push_back(argmax_mask(forward(net, scene.features)));
        gts.push_back(scene.mask);
    }
    return eval_metric(metric, preds, gts);
}

namespace {

constexpr std::uint32_t kCheckpointVersion = 1;

void write_u32(std::ofstream& out, std::uint32_t v) {
    char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8), static_cast<char>(v >> 16),
                 static_cast<char>(v >> 24)};
    out.write(b, 4);
}

std::uint32_t read_u32(std::ifstream& in, const std::filesystem::path& path) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
        throw ParseError("checkpoint truncated: " + path.string(),
                         static_cast<std::size_t>(in.gcount()));
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_doubles(std::ofstream& out, const std::vector<double>& v) {
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void read_doubles(std::ifstream& in, std::vector<double>& v, const std::filesystem::path& path) {
    if (!in.read(reinterpret_cast<char*>(v.data()),
                 static_cast<std::streamsize>(v.size() * sizeof(double))))
        throw ParseError("checkpoint truncated: " + path.string(),
                         static_cast<std::size_t>(in.gcount()));
}

} // namespace

void save_checkpoint(const std::filesystem::path& path, const TinySegNet& net) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out.write("ASLN", 4);
    write_u32(out, kCheckpointVersion);
    write_u32(out, static_cast<std::uint32_t>(net.in_channels));
    write_u32(out, static_cast<std::uint32_t>(net.hidden));
    write_u32(out, static_cast<std::uint32_t>(net.num_classes));
    write_doubles(out, net.w1);
    write_doubles(out, net.b1);
    write_doubles(out, net.w2);
    write_doubles(out, net.b2);
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

TinySegNet load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "ASLN", 4) != 0)
        throw ParseError("checkpoint: bad magic, expected \"ASLN\": " + path.string(), 0);
    const std::uint32_t version = read_u32(in, path);
    if (version != kCheckpointVersion)
        throw ParseError("checkpoint: unsupported version " + std::to_string(version), 4);
    const int in_c = static_cast<int>(read_u32(in, path));
    const int hidden = static_cast<int>(read_u32(in, path));
    const int classes = static_cast<int>(read_u32(in, path));
    require(in_c >= 1 && hidden >= 1 && classes >= 2, "checkpoint: implausible dimensions");

    TinySegNet net;
    net.in_channels = in_c;
    net.hidden = hidden;
    net.num_classes = classes;
    net.w1.resize(static_cast<std::size_t>(hidden) * in_c * 9);
    net.b1.resize(hidden);
    net.w2.resize(static_cast<std::size_t>(classes) * hidden * 9);
    net.b2.resize(classes);
    read_doubles(in, net.w1, path);
    read_doubles(in, net.b1, path);
    read_doubles(in, net.w2, path);
    read_doubles(in, net.b2, path);
    return net;
}

} // namespace asl
