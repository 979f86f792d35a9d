#pragma once

#include <filesystem>
#include <string>

#include "fssfda/dataset.hpp"
#include "fssfda/image.hpp"
#include "fssfda/synthetic.hpp"

namespace testutil {

// Fresh scratch directory under the build tree, wiped on construction.
class TempDir {
public:
    explicit TempDir(const std::string& name) : path_(std::filesystem::temp_directory_path() / "fssfda_tests" / name) {
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline fssfda::Image solid_image(int size, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    fssfda::Image img;
    img.width = size;
    img.height = size;
    img.pixels.resize(static_cast<std::size_t>(size) * size * 3);
    for (std::size_t i = 0; i < img.pixels.size(); i += 3) {
        img.pixels[i] = r;
        img.pixels[i + 1] = g;
        img.pixels[i + 2] = b;
    }
    return img;
}

// <root>/<domain>/<class>/imgN.ppm with per-class solid colors plus a small
// per-image intensity ramp so examples within a class differ.
inline void write_color_domain(const std::filesystem::path& root, const std::string& domain, int num_classes,
                               int per_class, int size = 16) {
    for (int c = 0; c < num_classes; ++c) {
        const auto dir = root / domain / ("class" + std::to_string(c));
        std::filesystem::create_directories(dir);
        for (int i = 0; i < per_class; ++i) {
            const int shade = 150 + 10 * (i % 10);
            fssfda::Image img = solid_image(size, c == 0 ? shade : 30, c == 1 ? shade : 30,
                                            c >= 2 ? shade : 30);
            fssfda::save_ppm(dir / ("img" + std::to_string(i) + ".ppm"), img);
        }
    }
}

// Two-domain synthetic blob data at unit-test scale.
inline fssfda::SyntheticConfig tiny_synthetic(int num_classes = 3, int per_class = 10, int image_size = 16) {
    fssfda::SyntheticConfig cfg;
    cfg.num_classes = num_classes;
    cfg.per_class = per_class;
    cfg.image_size = image_size;
    return cfg;
}

}  // namespace testutil
