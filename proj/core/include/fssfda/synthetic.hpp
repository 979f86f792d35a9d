#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace fssfda {

// What the class label encodes in generated images. Color tasks color the
// blob by class hue; position tasks place the blob at a class-specific
// angle with a random hue. A position-labeled dataset plays the role of a
// "semantically unrelated" pretraining corpus.
enum class SyntheticLabelFactor { Color, Position };

// Per-domain appearance shift applied on top of the class signal.
struct SyntheticDomainShift {
    std::string name;
    double hue_shift_deg = 0.0;       // rotates every blob hue
    double angle_shift_deg = 0.0;     // rotates blob positions around center
    double background = 0.15;        // base background intensity
    double noise = 0.04;             // additive pixel noise amplitude
};

struct SyntheticConfig {
    int num_classes = 4;
    int per_class = 60;              // images per class per domain
    int image_size = 32;
    SyntheticLabelFactor label_factor = SyntheticLabelFactor::Color;
    double hue_jitter_deg = 14.0;    // within-class hue spread (color tasks)
    double angle_jitter_deg = 14.0;  // within-class position spread (position tasks)
    // Per-image appearance ranges (fractions of the image side for
    // geometry). Wider ranges make few labeled shots less representative.
    double sat_min = 0.75, sat_max = 0.95;
    double val_min = 0.75, val_max = 0.95;
    double sigma_min = 0.10, sigma_max = 0.16;
    double radius_min = 0.20, radius_max = 0.30;
    double background_jitter = 0.0;  // per-image uniform shift of the background
    std::uint64_t seed = 0;
    std::vector<SyntheticDomainShift> domains = {
        {"alpha", 0.0, 0.0, 0.12, 0.035},
        {"beta", 26.0, 20.0, 0.28, 0.055},
    };
};

// Writes <root>/<domain>/<class_name>/img_XXXX.ppm for every domain in the
// config. Deterministic for a fixed config.
void generate_synthetic_dataset(const std::filesystem::path& root, const SyntheticConfig& config);

}  // namespace fssfda
