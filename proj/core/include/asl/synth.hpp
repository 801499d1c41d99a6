#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "asl/grid.hpp"

namespace asl {

// One synthetic segmentation scene. Features carry C noisy class-indicator
// channels (box-blurred before noise so border pixels are ambiguous) plus
// two normalized-coordinate channels, so channels = num_classes + 2.
struct Scene {
    Tensor3 features;
    LabelMask mask;
};

struct SceneParams {
    int size_px = 16;
    int num_classes = 3;
    double imbalance = 0.25; // requested foreground area fraction
};

inline constexpr double kFeatureNoiseSigma = 0.4;

void validate(const SceneParams& params); // size >= 8, classes in [2,5], imbalance in [0,0.9]

Scene gen_scene(std::uint64_t seed, const SceneParams& params);

struct DatasetSplit {
    std::vector<Scene> train;
    std::vector<Scene> hold_out;
    std::uint64_t seed = 0;
};

// 75/25 train/hold-out split by seeded shuffle. Scene i depends only on
// (seed, i), not on count.
DatasetSplit gen_dataset(std::uint64_t seed, int count, const SceneParams& params);

// binary PGM ("P5", maxval 255), one byte per pixel = class index
std::vector<std::uint8_t> write_mask_pgm(const LabelMask& mask);
LabelMask read_mask_pgm(std::span<const std::uint8_t> bytes, int num_classes);

// flat feature binary: magic "ASLF", u32 channels/height/width, f64 LE data
std::vector<std::uint8_t> write_features_bin(const Tensor3& features);
Tensor3 read_features_bin(std::span<const std::uint8_t> bytes);

// directory layout: <root>/{train,holdout}/<idx>.{pgm,aslf} plus meta.json
void save_dataset(const std::filesystem::path& root, const DatasetSplit& split,
                  const SceneParams& params);

struct LoadedDataset {
    DatasetSplit split;
    SceneParams params;
};

LoadedDataset load_dataset(const std::filesystem::path& root);

} // namespace asl
