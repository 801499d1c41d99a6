#pragma once

#include <cstdint>
#include <vector>

namespace asl {

// Per-pixel integer class labels: ground truth or argmax prediction.
struct LabelMask {
    int height = 0;
    int width = 0;
    int num_classes = 0;
    std::vector<std::uint8_t> labels; // row-major

    std::uint8_t at(int y, int x) const { return labels[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t& at(int y, int x) { return labels[static_cast<std::size_t>(y) * width + x]; }
    int pixels() const { return height * width; }
};

LabelMask make_mask(int height, int width, int num_classes);
void validate(const LabelMask& mask); // throws std::invalid_argument

// One 2-D value plane. Discrete masks hold {0,1}; relaxed maps hold [0,1].
struct Plane {
    int height = 0;
    int width = 0;
    std::vector<double> v; // row-major

    double at(int y, int x) const { return v[static_cast<std::size_t>(y) * width + x]; }
    double& at(int y, int x) { return v[static_cast<std::size_t>(y) * width + x]; }
    int pixels() const { return height * width; }
};

Plane make_plane(int height, int width, double fill = 0.0);

// Dense (channel, row, col) tensor: logits, probabilities, features, gradients.
struct Tensor3 {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> v; // channel-major, each channel row-major

    std::size_t idx(int c, int y, int x) const {
        return (static_cast<std::size_t>(c) * height + y) * width + x;
    }
    double at(int c, int y, int x) const { return v[idx(c, y, x)]; }
    double& at(int c, int y, int x) { return v[idx(c, y, x)]; }

    // contiguous view of one channel
    const double* channel(int c) const { return v.data() + static_cast<std::size_t>(c) * height * width; }
    double* channel(int c) { return v.data() + static_cast<std::size_t>(c) * height * width; }
};

Tensor3 make_tensor(int channels, int height, int width, double fill = 0.0);

// Unnormalized per-class scores and per-class probabilities share storage
// layout; ProbMap additionally promises a unit sum over channels per pixel.
using LogitMap = Tensor3;
using ProbMap = Tensor3;

void validate_probs(const ProbMap& probs); // unit-sum within 1e-6, values in [0,1]

} // namespace asl
