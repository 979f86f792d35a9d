#include "fssfda/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "fssfda/error.hpp"

namespace fssfda {

namespace {

// Reads one whitespace-delimited token, skipping '#' comment lines.
std::string next_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (!std::isspace(c)) {
            tok.push_back(static_cast<char>(c));
            break;
        }
    }
    while ((c = in.get()) != EOF && !std::isspace(c)) tok.push_back(static_cast<char>(c));
    return tok;
}

int parse_dim(const std::string& tok, const std::filesystem::path& path) {
    try {
        int v = std::stoi(tok);
        if (v <= 0) throw std::invalid_argument("nonpositive");
        return v;
    } catch (const std::exception&) {
        throw IngestionError("undecodable image (bad header): " + path.string());
    }
}

}  // namespace

Image load_image(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestionError("cannot open image: " + path.string());

    std::string magic = next_token(in);
    if (magic != "P6" && magic != "P5") {
        throw IngestionError("undecodable image (unsupported format): " + path.string());
    }
    int w = parse_dim(next_token(in), path);
    int h = parse_dim(next_token(in), path);
    int maxval = parse_dim(next_token(in), path);
    if (maxval != 255) throw IngestionError("undecodable image (maxval != 255): " + path.string());

    Image img;
    img.width = w;
    img.height = h;
    img.pixels.resize(static_cast<std::size_t>(w) * h * 3);

    if (magic == "P6") {
        in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
        if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) {
            throw IngestionError("undecodable image (truncated): " + path.string());
        }
    } else {
        std::vector<std::uint8_t> gray(static_cast<std::size_t>(w) * h);
        in.read(reinterpret_cast<char*>(gray.data()), static_cast<std::streamsize>(gray.size()));
        if (in.gcount() != static_cast<std::streamsize>(gray.size())) {
            throw IngestionError("undecodable image (truncated): " + path.string());
        }
        for (std::size_t i = 0; i < gray.size(); ++i) {
            img.pixels[i * 3 + 0] = gray[i];
            img.pixels[i * 3 + 1] = gray[i];
            img.pixels[i * 3 + 2] = gray[i];
        }
    }
    return img;
}

void save_ppm(const std::filesystem::path& path, const Image& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IngestionError("cannot write image: " + path.string());
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
}

FloatImage to_float(const Image& img) {
    FloatImage f;
    f.width = img.width;
    f.height = img.height;
    f.rgb.resize(img.pixels.size());
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        f.rgb[i] = static_cast<float>(img.pixels[i]) * (1.0f / 255.0f);
    }
    return f;
}

Image to_u8(const FloatImage& img) {
    Image out;
    out.width = img.width;
    out.height = img.height;
    out.pixels.resize(img.rgb.size());
    for (std::size_t i = 0; i < img.rgb.size(); ++i) {
        float v = std::clamp(img.rgb[i], 0.0f, 1.0f) * 255.0f;
        out.pixels[i] = static_cast<std::uint8_t>(std::lround(v));
    }
    return out;
}

FloatImage crop_resize_bilinear(const FloatImage& src, int x0, int y0, int w, int h, int out_w, int out_h) {
    FloatImage out;
    out.width = out_w;
    out.height = out_h;
    out.rgb.resize(static_cast<std::size_t>(out_w) * out_h * 3);

    // Align corners=false convention: sample at pixel centers.
    const float sx = static_cast<float>(w) / static_cast<float>(out_w);
    const float sy = static_cast<float>(h) / static_cast<float>(out_h);
    for (int oy = 0; oy < out_h; ++oy) {
        float fy = (static_cast<float>(oy) + 0.5f) * sy - 0.5f + static_cast<float>(y0);
        fy = std::clamp(fy, 0.0f, static_cast<float>(src.height - 1));
        int iy0 = static_cast<int>(fy);
        int iy1 = std::min(iy0 + 1, src.height - 1);
        float wy = fy - static_cast<float>(iy0);
        for (int ox = 0; ox < out_w; ++ox) {
            float fx = (static_cast<float>(ox) + 0.5f) * sx - 0.5f + static_cast<float>(x0);
            fx = std::clamp(fx, 0.0f, static_cast<float>(src.width - 1));
            int ix0 = static_cast<int>(fx);
            int ix1 = std::min(ix0 + 1, src.width - 1);
            float wx = fx - static_cast<float>(ix0);

            const float* p00 = src.px(iy0, ix0);
            const float* p01 = src.px(iy0, ix1);
            const float* p10 = src.px(iy1, ix0);
            const float* p11 = src.px(iy1, ix1);
            float* dst = out.px(oy, ox);
            for (int c = 0; c < 3; ++c) {
                float top = p00[c] + (p01[c] - p00[c]) * wx;
                float bot = p10[c] + (p11[c] - p10[c]) * wx;
                dst[c] = top + (bot - top) * wy;
            }
        }
    }
    return out;
}

FloatImage resize_bilinear(const FloatImage& src, int out_w, int out_h) {
    return crop_resize_bilinear(src, 0, 0, src.width, src.height, out_w, out_h);
}

Tensor to_chw_tensor(const FloatImage& img, const float mean[3], const float stddev[3]) {
    Tensor t({3, img.height, img.width});
    float* d = t.data();
    const std::size_t plane = static_cast<std::size_t>(img.height) * img.width;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const float* p = img.px(y, x);
            std::size_t off = static_cast<std::size_t>(y) * img.width + x;
            for (int c = 0; c < 3; ++c) {
                d[plane * c + off] = (p[c] - mean[c]) / stddev[c];
            }
        }
    }
    return t;
}

}  // namespace fssfda
