#include "fssfda/augment.hpp"

#include <algorithm>
#include <cmath>

#include "fssfda/rng.hpp"

namespace fssfda {

namespace {

void apply_hflip(FloatImage& img) {
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width / 2; ++x) {
            float* a = img.px(y, x);
            float* b = img.px(y, img.width - 1 - x);
            for (int c = 0; c < 3; ++c) std::swap(a[c], b[c]);
        }
    }
}

float luma(const float* p) { return 0.299f * p[0] + 0.587f * p[1] + 0.114f * p[2]; }

void apply_brightness(FloatImage& img, float factor) {
    for (float& v : img.rgb) v = std::clamp(v * factor, 0.0f, 1.0f);
}

void apply_contrast(FloatImage& img, float factor) {
    double mean = 0.0;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) mean += luma(img.px(y, x));
    }
    const float gray = static_cast<float>(mean / (static_cast<double>(img.width) * img.height));
    for (float& v : img.rgb) v = std::clamp(gray + (v - gray) * factor, 0.0f, 1.0f);
}

void apply_saturation(FloatImage& img, float factor) {
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            float* p = img.px(y, x);
            const float g = luma(p);
            for (int c = 0; c < 3; ++c) p[c] = std::clamp(g + (p[c] - g) * factor, 0.0f, 1.0f);
        }
    }
}

void apply_grayscale(FloatImage& img) {
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            float* p = img.px(y, x);
            const float g = luma(p);
            p[0] = p[1] = p[2] = g;
        }
    }
}

// torchvision-style random resized crop region: try areas in
// [scale_min, scale_max] with aspect in [ratio_min, ratio_max], fall back to
// a center crop.
FloatImage random_resized_crop(const FloatImage& src, const AugmentConfig& cfg, Rng& rng) {
    const double area = static_cast<double>(src.width) * src.height;
    for (int attempt = 0; attempt < 10; ++attempt) {
        const double target_area = area * rng.uniform(cfg.scale_min, cfg.scale_max);
        const double log_ratio = rng.uniform(std::log(cfg.ratio_min), std::log(cfg.ratio_max));
        const double ratio = std::exp(log_ratio);
        const int w = static_cast<int>(std::lround(std::sqrt(target_area * ratio)));
        const int h = static_cast<int>(std::lround(std::sqrt(target_area / ratio)));
        if (w > 0 && h > 0 && w <= src.width && h <= src.height) {
            const int x0 = rng.below_int(src.width - w + 1);
            const int y0 = rng.below_int(src.height - h + 1);
            return crop_resize_bilinear(src, x0, y0, w, h, cfg.crop, cfg.crop);
        }
    }
    const int side = std::min(src.width, src.height);
    const int x0 = (src.width - side) / 2;
    const int y0 = (src.height - side) / 2;
    return crop_resize_bilinear(src, x0, y0, side, side, cfg.crop, cfg.crop);
}

FloatImage eval_preprocess(const FloatImage& src, const AugmentConfig& cfg) {
    // Resize the short side to crop * 8/7 (the usual 256-for-224 margin),
    // then take the center crop.
    const int resize_short = std::max(cfg.crop, static_cast<int>(std::lround(cfg.crop * 8.0 / 7.0)));
    int rw, rh;
    if (src.width <= src.height) {
        rw = resize_short;
        rh = static_cast<int>(std::lround(static_cast<double>(src.height) * resize_short / src.width));
    } else {
        rh = resize_short;
        rw = static_cast<int>(std::lround(static_cast<double>(src.width) * resize_short / src.height));
    }
    FloatImage resized = resize_bilinear(src, rw, rh);
    const int x0 = (rw - cfg.crop) / 2;
    const int y0 = (rh - cfg.crop) / 2;
    return crop_resize_bilinear(resized, x0, y0, cfg.crop, cfg.crop, cfg.crop, cfg.crop);
}

}  // namespace

Tensor augment(const Image& img, bool train_mode, std::uint64_t seed, const AugmentConfig& cfg) {
    FloatImage f = to_float(img);
    if (!train_mode) {
        FloatImage out = eval_preprocess(f, cfg);
        return to_chw_tensor(out, cfg.mean, cfg.stddev);
    }

    Rng rng(mix_seed(seed, "augment"));
    FloatImage out = random_resized_crop(f, cfg, rng);
    if (rng.bernoulli(cfg.hflip_prob)) apply_hflip(out);
    // Fixed jitter order: brightness, contrast, saturation.
    apply_brightness(out, static_cast<float>(rng.uniform(1.0 - cfg.jitter, 1.0 + cfg.jitter)));
    apply_contrast(out, static_cast<float>(rng.uniform(1.0 - cfg.jitter, 1.0 + cfg.jitter)));
    apply_saturation(out, static_cast<float>(rng.uniform(1.0 - cfg.jitter, 1.0 + cfg.jitter)));
    if (rng.bernoulli(cfg.grayscale_prob)) apply_grayscale(out);
    return to_chw_tensor(out, cfg.mean, cfg.stddev);
}

}  // namespace fssfda
