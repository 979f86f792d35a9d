#pragma once

#include <cstdint>

#include "fssfda/image.hpp"
#include "fssfda/tensor.hpp"

namespace fssfda {

// Standard augmentation stack: random resized crop, horizontal flip,
// color jitter (brightness/contrast/saturation 0.3), random grayscale 0.1.
struct AugmentConfig {
    int crop = 224;
    double scale_min = 0.7;
    double scale_max = 1.0;
    double ratio_min = 3.0 / 4.0;
    double ratio_max = 4.0 / 3.0;
    double jitter = 0.3;
    double grayscale_prob = 0.1;
    double hflip_prob = 0.5;
    float mean[3] = {0.485f, 0.456f, 0.406f};
    float stddev[3] = {0.229f, 0.224f, 0.225f};
};

// train_mode on: the four stochastic transforms, then normalize; all draws
// come from the seed, so the same (image, seed) gives the same tensor.
// train_mode off: deterministic resize + center crop + normalize.
// Returns a [3, crop, crop] tensor.
Tensor augment(const Image& img, bool train_mode, std::uint64_t seed, const AugmentConfig& config = {});

}  // namespace fssfda
