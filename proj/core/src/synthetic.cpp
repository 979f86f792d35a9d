#include "fssfda/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "fssfda/error.hpp"
#include "fssfda/image.hpp"
#include "fssfda/rng.hpp"

namespace fs = std::filesystem;

namespace fssfda {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Rgb {
    double r, g, b;
};

Rgb hsv_to_rgb(double hue_deg, double sat, double val) {
    double h = std::fmod(hue_deg, 360.0);
    if (h < 0.0) h += 360.0;
    double c = val * sat;
    double x = c * (1.0 - std::fabs(std::fmod(h / 60.0, 2.0) - 1.0));
    double m = val - c;
    double r = 0, g = 0, b = 0;
    if (h < 60) {
        r = c, g = x;
    } else if (h < 120) {
        r = x, g = c;
    } else if (h < 180) {
        g = c, b = x;
    } else if (h < 240) {
        g = x, b = c;
    } else if (h < 300) {
        r = x, b = c;
    } else {
        r = c, b = x;
    }
    return {r + m, g + m, b + m};
}

Image render_blob(int size, const Rgb& color, double cx, double cy, double sigma, double background, double noise,
                  Rng& rng) {
    Image img;
    img.width = size;
    img.height = size;
    img.pixels.resize(static_cast<std::size_t>(size) * size * 3);

    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            double dx = (static_cast<double>(x) - cx);
            double dy = (static_cast<double>(y) - cy);
            double w = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
            double base[3] = {background, background, background};
            double blob[3] = {color.r, color.g, color.b};
            std::uint8_t* px = img.px(y, x);
            for (int c = 0; c < 3; ++c) {
                double v = base[c] + (blob[c] - base[c]) * w;
                v += noise * (rng.uniform() * 2.0 - 1.0);
                v = std::clamp(v, 0.0, 1.0);
                px[c] = static_cast<std::uint8_t>(std::lround(v * 255.0));
            }
        }
    }
    return img;
}

}  // namespace

void generate_synthetic_dataset(const fs::path& root, const SyntheticConfig& config) {
    if (config.num_classes < 2) throw ScenarioError("synthetic: num_classes must be >= 2");
    if (config.per_class < 1) throw ScenarioError("synthetic: per_class must be >= 1");
    if (config.domains.empty()) throw ScenarioError("synthetic: at least one domain required");

    const int size = config.image_size;
    const double s = static_cast<double>(size);

    for (std::size_t d = 0; d < config.domains.size(); ++d) {
        const auto& dom = config.domains[d];
        for (int cls = 0; cls < config.num_classes; ++cls) {
            char cls_name[16];
            std::snprintf(cls_name, sizeof(cls_name), "c%02d", cls);
            fs::path dir = root / dom.name / cls_name;
            fs::create_directories(dir);

            for (int i = 0; i < config.per_class; ++i) {
                Rng rng(mix_seed(config.seed, "synth", d, static_cast<std::uint64_t>(cls) * 1000003ULL +
                                                              static_cast<std::uint64_t>(i)));

                const double class_frac = static_cast<double>(cls) / static_cast<double>(config.num_classes);
                double hue, angle;
                if (config.label_factor == SyntheticLabelFactor::Color) {
                    hue = 360.0 * class_frac + rng.uniform(-config.hue_jitter_deg, config.hue_jitter_deg);
                    angle = rng.uniform(0.0, 360.0);
                } else {
                    angle = 360.0 * class_frac + rng.uniform(-config.angle_jitter_deg, config.angle_jitter_deg);
                    hue = rng.uniform(0.0, 360.0);
                }
                hue += dom.hue_shift_deg;
                angle += dom.angle_shift_deg;

                const double radius = s * rng.uniform(config.radius_min, config.radius_max);
                const double cx = s * 0.5 + radius * std::cos(angle * kPi / 180.0) + rng.normal(0.0, s * 0.02);
                const double cy = s * 0.5 + radius * std::sin(angle * kPi / 180.0) + rng.normal(0.0, s * 0.02);
                const double sigma = s * rng.uniform(config.sigma_min, config.sigma_max);
                const double sat = rng.uniform(config.sat_min, config.sat_max);
                const double val = rng.uniform(config.val_min, config.val_max);
                const double background =
                    dom.background + rng.uniform(-config.background_jitter, config.background_jitter);

                Rgb color = hsv_to_rgb(hue, sat, val);
                Image img = render_blob(size, color, cx, cy, sigma, background, dom.noise, rng);

                char fname[32];
                std::snprintf(fname, sizeof(fname), "img_%04d.ppm", i);
                save_ppm(dir / fname, img);
            }
        }
    }
}

}  // namespace fssfda
