#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "asl/grid.hpp"
#include "asl/loss_spec.hpp"
#include "asl/synth.hpp"

namespace asl {

// Two-layer CNN: conv3x3 (in -> hidden) + ReLU + conv3x3 (hidden -> classes),
// replicate padding, same spatial size throughout.
struct TinySegNet {
    int in_channels = 0;
    int hidden = 0;
    int num_classes = 0;
    std::vector<double> w1; // [hidden][in][3][3]
    std::vector<double> b1; // [hidden]
    std::vector<double> w2; // [classes][hidden][3][3]
    std::vector<double> b2; // [classes]
};

// He-scaled Gaussian weights, zero biases; bit-identical per seed.
TinySegNet model_init(std::uint64_t seed, int in_channels, int hidden, int num_classes);

struct ForwardCache {
    Tensor3 pre1;  // conv1 output before ReLU
    Tensor3 act1;  // after ReLU
};

LogitMap forward(const TinySegNet& net, const Tensor3& features, ForwardCache* cache = nullptr);

struct NetGrads {
    std::vector<double> w1, b1, w2, b2;
};

NetGrads make_grads(const TinySegNet& net); // zero-initialized, matching shapes
void backward(const TinySegNet& net, const Tensor3& features, const ForwardCache& cache,
              const LogitMap& dlogits, NetGrads& accum);

struct TrainSchedule {
    int iterations = 200;
    int batch_size = 8;
    double lr_initial = 0.1;
    double lr_poly_power = 0.9;
    double momentum = 0.9;
    double weight_decay = 5e-4;
    std::uint64_t seed = 0;
};

void validate(const TrainSchedule& schedule);

// One SGD-with-momentum update: v = m*v + (g + wd*w); w -= lr*v.
void sgd_step(TinySegNet& net, const NetGrads& grads, NetGrads& velocity, double lr,
              const TrainSchedule& schedule);

// SGD with momentum, weight decay and polynomial LR decay over deterministic
// seeded minibatch shuffles. Throws NumericError (with the step index) if
// the loss or a gradient turns non-finite.
TinySegNet train(TinySegNet net, std::span<const Scene> data, const LossSpec& spec,
                 const TrainSchedule& schedule);

LabelMask argmax_mask(const LogitMap& logits);

double evaluate(const TinySegNet& net, std::span<const Scene> data, const MetricId& metric);

// checkpoint: magic "ASLN", u32 version, u32 dims (in, hidden, classes),
// then little-endian f64 weights in declaration order
void save_checkpoint(const std::filesystem::path& path, const TinySegNet& net);
TinySegNet load_checkpoint(const std::filesystem::path& path);

} // namespace asl
