#pragma once

#include <vector>

#include "asl/grid.hpp"

namespace asl {

// Sliding-window min/max, stride 1, replicate (edge) padding, same output
// size. Odd kernels only. When src is non-null it receives, per output
// pixel, the flat index of the input pixel the extremum was taken from
// (first hit in row-major window order), which back-propagation uses to
// route gradients.
Plane min_pool(const Plane& map, int kernel_px, std::vector<int>* src = nullptr);
Plane max_pool(const Plane& map, int kernel_px, std::vector<int>* src = nullptr);

// BD(y) = y XOR min_pool(y) on a discrete {0,1} plane.
Plane boundary_extract(const Plane& mask_plane, int kernel_px = 3);

} // namespace asl
