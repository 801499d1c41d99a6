#include "asl/pooling.hpp"

#include <algorithm>

#include "asl/errors.hpp"

namespace asl {

namespace {

template <bool TakeMin>
Plane pool(const Plane& map, int kernel_px, std::vector<int>* src) {
    require(kernel_px >= 1 && kernel_px % 2 == 1, "pooling kernel must be odd and >= 1");
    const int h = map.height, w = map.width, r = kernel_px / 2;
    Plane out = make_plane(h, w);
    if (src) src->assign(static_cast<std::size_t>(h) * w, 0);

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            bool first = true;
            double best = 0.0;
            int best_idx = 0;
            for (int dy = -r; dy <= r; ++dy) {
                const int sy = std::clamp(y + dy, 0, h - 1);
                for (int dx = -r; dx <= r; ++dx) {
                    const int sx = std::clamp(x + dx, 0, w - 1);
                    const double val = map.at(sy, sx);
                    const bool better = first || (TakeMin ? (val < best) : (val > best));
                    if (better) {
                        best = val;
                        best_idx = sy * w + sx;
                        first = false;
                    }
                }
            }
            out.at(y, x) = best;
            if (src) (*src)[static_cast<std::size_t>(y) * w + x] = best_idx;
        }
    }
    return out;
}

} // namespace

Plane min_pool(const Plane& map, int kernel_px, std::vector<int>* src) {
    return pool<true>(map, kernel_px, src);
}

Plane max_pool(const Plane& map, int kernel_px, std::vector<int>* src) {
    return pool<false>(map, kernel_px, src);
}

Plane boundary_extract(const Plane& mask_plane, int kernel_px) {
    Plane eroded = min_pool(mask_plane, kernel_px);
    Plane out = make_plane(mask_plane.height, mask_plane.width);
    for (std::size_t i = 0; i < out.v.size(); ++i)
        out.v[i] = (mask_plane.v[i] != eroded.v[i]) ? 1.0 : 0.0;
    return out;
}

} // namespace asl
