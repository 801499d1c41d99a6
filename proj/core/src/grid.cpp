#include "asl/grid.hpp"

#include <cmath>

#include "asl/errors.hpp"

namespace asl {

LabelMask make_mask(int height, int width, int num_classes) {
    require(height >= 1 && width >= 1, "mask dimensions must be positive");
    require(num_classes >= 2, "num_classes must be >= 2");
    LabelMask m;
    m.height = height;
    m.width = width;
    m.num_classes = num_classes;
    m.labels.assign(static_cast<std::size_t>(height) * width, 0);
    return m;
}

void validate(const LabelMask& mask) {
    require(mask.height >= 1 && mask.width >= 1, "mask dimensions must be positive");
    require(mask.num_classes >= 2, "num_classes must be >= 2");
    require(mask.labels.size() == static_cast<std::size_t>(mask.height) * mask.width,
            "label buffer size mismatch");
    for (std::uint8_t l : mask.labels)
        require(l < mask.num_classes, "label out of range");
}

Plane make_plane(int height, int width, double fill) {
    require(height >= 1 && width >= 1, "plane dimensions must be positive");
    Plane p;
    p.height = height;
    p.width = width;
    p.v.assign(static_cast<std::size_t>(height) * width, fill);
    return p;
}

Tensor3 make_tensor(int channels, int height, int width, double fill) {
    require(channels >= 1 && height >= 1 && width >= 1, "tensor dimensions must be positive");
    Tensor3 t;
    t.channels = channels;
    t.height = height;
    t.width = width;
    t.v.assign(static_cast<std::size_t>(channels) * height * width, fill);
    return t;
}

void validate_probs(const ProbMap& probs) {
    require(probs.channels >= 2, "prob map needs >= 2 classes");
    for (int y = 0; y < probs.height; ++y) {
        for (int x = 0; x < probs.width; ++x) {
            double sum = 0.0;
            for (int c = 0; c < probs.channels; ++c) {
                double p = probs.at(c, y, x);
                require(p >= 0.0 && p <= 1.0, "probability outside [0, 1]");
                sum += p;
            }
            require(std::abs(sum - 1.0) <= 1e-6, "per-pixel class probabilities must sum to 1");
        }
    }
}

} // namespace asl
