#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "fssfda/tensor.hpp"

namespace fssfda {

// 8-bit RGB image, interleaved, row-major.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // height * width * 3

    std::uint8_t* px(int y, int x) { return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
    const std::uint8_t* px(int y, int x) const {
        return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3;
    }
};

// Float RGB image in [0,1], interleaved. Intermediate form of the
// augmentation pipeline.
struct FloatImage {
    int width = 0;
    int height = 0;
    std::vector<float> rgb;  // height * width * 3

    float* px(int y, int x) { return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
    const float* px(int y, int x) const { return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
};

// Binary PPM (P6) and PGM (P5, expanded to RGB). Throws IngestionError with
// the path on anything it cannot decode.
Image load_image(const std::filesystem::path& path);
void save_ppm(const std::filesystem::path& path, const Image& img);

FloatImage to_float(const Image& img);
Image to_u8(const FloatImage& img);

// Bilinear sampling of an axis-aligned source rectangle into out_w x out_h.
FloatImage resize_bilinear(const FloatImage& src, int out_w, int out_h);
FloatImage crop_resize_bilinear(const FloatImage& src, int x0, int y0, int w, int h, int out_w, int out_h);

// CHW tensor [3,H,W] from interleaved float image, channelwise normalized.
Tensor to_chw_tensor(const FloatImage& img, const float mean[3], const float stddev[3]);

}  // namespace fssfda
